"""Dense statevector engine.

States are immutable :class:`Ket` values over an ordered qubit register.
Qubit 0 is the leftmost label in ket notation, so ``|b0 b1 ... b(n-1)>`` lives
at index ``sum(b_k * 2**(n-1-k))``.  That is plain C-order on a ``(2,)*n``
tensor, which is what every routine here relies on.

Bell basis convention (fixed throughout the package)::

    PsiPlus  = (|00> + |11>)/sqrt2     PhiPlus  = (|01> + |10>)/sqrt2
    PsiMinus = (|00> - |11>)/sqrt2     PhiMinus = (|01> - |10>)/sqrt2

This is the reverse of the usual textbook naming; it is the only labelling
under which the HQIS correction tables come out right.
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateTarget,
    IndexOutOfRange,
    NonPowerOfTwoLength,
    NotUnitary,
    RegisterTooLarge,
    SizeMismatch,
    StateError,
    ZeroNorm,
    ZeroProbabilityBranch,
)

MAX_QUBITS = 14
ATOL = 1e-12
UNITARY_TOL = 1e-10
# Born probabilities below this are treated as impossible branches.
ZERO_PROB = 1e-14

_SQ2 = 1 / np.sqrt(2)


class Ket:
    """Normalized pure state on ``num_qubits`` qubits.

    Build instances with :func:`ket_from_amplitudes` or :func:`basis_ket`;
    the amplitude array is read-only.
    """

    __slots__ = ("amps", "num_qubits")

    def __init__(self, amps: np.ndarray, num_qubits: int):
        self.amps = amps
        self.num_qubits = num_qubits

    @classmethod
    def _make(cls, arr: np.ndarray) -> "Ket":
        arr = np.asarray(arr, dtype=complex).reshape(-1)
        norm = math.sqrt(np.vdot(arr, arr).real)
        if norm == 0 or not math.isfinite(norm):
            raise ZeroNorm("state has zero (or non-finite) norm")
        arr = arr * (1 / norm)
        arr.flags.writeable = False
        return cls(arr, arr.size.bit_length() - 1)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Ket":
        # for results of norm-preserving maps on already normalized input; every
        # caller passes a fresh temporary or a view of read-only amplitudes
        arr = arr.reshape(-1)
        arr.flags.writeable = False
        return cls(arr, arr.size.bit_length() - 1)

    def __len__(self) -> int:
        return self.amps.size

    def __repr__(self) -> str:
        terms = []
        for i in np.flatnonzero(np.abs(self.amps) > 1e-9):
            label = format(int(i), f"0{self.num_qubits}b")
            a = self.amps[i]
            terms.append(f"({a.real:+.4g}{a.imag:+.4g}j)|{label}>")
        return "Ket(" + " ".join(terms) + ")"

    def amplitude(self, bits: str) -> complex:
        """Amplitude of the basis state labelled ``bits`` (e.g. ``"0110"``)."""
        if len(bits) != self.num_qubits:
            raise SizeMismatch(f"expected {self.num_qubits} bits, got {bits!r}")
        return complex(self.amps[int(bits, 2)])

    def allclose(self, other: "Ket", atol: float = ATOL) -> bool:
        """Exact amplitude equality within ``atol`` (global phase matters)."""
        return self.num_qubits == other.num_qubits and bool(
            np.allclose(self.amps, other.amps, rtol=0, atol=atol)
        )


class BellOutcome(str, enum.Enum):
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"

    def __str__(self) -> str:
        return self.value

    @property
    def is_psi(self) -> bool:
        return self in (BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS)


BELL_ORDER = (
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
)

# columns are the Bell vectors in BELL_ORDER
_BELL_MATRIX = _SQ2 * np.array(
    [
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, -1],
        [1, -1, 0, 0],
    ],
    dtype=complex,
)
_BELL_MATRIX.flags.writeable = False
_BELL_ADJ = _BELL_MATRIX.conj().T.copy()

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex)
for _g in (I2, X, Y, Z, H):
    _g.flags.writeable = False


def ket_from_amplitudes(amps: Sequence[complex] | np.ndarray) -> Ket:
    """Normalize ``amps`` into a :class:`Ket`.

    >>> ket_from_amplitudes([1, 1]).amps.round(6).tolist()
    [(0.707107+0j), (0.707107+0j)]
    """
    arr = np.asarray(amps, dtype=complex).reshape(-1)
    size = arr.size
    if size < 2 or size & (size - 1):
        raise NonPowerOfTwoLength(f"amplitude count {size} is not a power of two >= 2")
    if size > 2**MAX_QUBITS:
        raise RegisterTooLarge(f"{size.bit_length() - 1} qubits exceeds {MAX_QUBITS}")
    return Ket._make(arr)


def basis_ket(bits: str) -> Ket:
    """Computational basis state, e.g. ``basis_ket("01")``."""
    if not bits or set(bits) - {"0", "1"}:
        raise StateError(f"not a bit string: {bits!r}")
    arr = np.zeros(2 ** len(bits), dtype=complex)
    arr[int(bits, 2)] = 1
    return ket_from_amplitudes(arr)


def bell_state(outcome: BellOutcome) -> Ket:
    return _BELL_KETS[BellOutcome(outcome)]


_BELL_KETS = {o: Ket._make(_BELL_MATRIX[:, k]) for k, o in enumerate(BELL_ORDER)}

# single-qubit eigenstates keyed by (basis, bit)
EIGENSTATES = {
    ("Z", 0): Ket._make([1, 0]),
    ("Z", 1): Ket._make([0, 1]),
    ("X", 0): Ket._make([_SQ2, _SQ2]),
    ("X", 1): Ket._make([_SQ2, -_SQ2]),
}


def tensor(a: Ket, b: Ket) -> Ket:
    """Kronecker product with ``a``'s qubits first."""
    if a.num_qubits + b.num_qubits > MAX_QUBITS:
        raise RegisterTooLarge(
            f"{a.num_qubits + b.num_qubits} qubits exceeds {MAX_QUBITS}"
        )
    return Ket._wrap(np.multiply.outer(a.amps, b.amps).ravel())


def as_unitary(matrix, tol: float = UNITARY_TOL) -> np.ndarray:
    """Validate a 2x2 or 4x4 unitary and return it as a read-only array."""
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise SizeMismatch(f"expected a 2x2 or 4x4 matrix, got shape {m.shape}")
    err = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
    if not err <= tol:
        raise NotUnitary(f"||U U^dag - I||_max = {err:.3g} > {tol:g}")
    m.flags.writeable = False
    return m


def _check_targets(n: int, targets: Sequence[int]) -> tuple[int, ...]:
    targets = tuple(targets)
    if (n, targets) in _AXES:
        return targets
    for t in targets:
        if not 0 <= t < n:
            raise IndexOutOfRange(f"qubit {t} out of range for {n}-qubit register")
    if len(set(targets)) != len(targets):
        raise DuplicateTarget(f"repeated target in {targets}")
    return targets


# (n, targets) -> (forward axes, inverse axes); filled once targets pass the checks
_AXES: dict[tuple[int, tuple[int, ...]], tuple[list[int], list[int]]] = {}


def _axes_pair(n: int, targets: tuple[int, ...]) -> tuple[list[int], list[int]]:
    key = (n, targets)
    pair = _AXES.get(key)
    if pair is None:
        forward = list(targets) + [q for q in range(n) if q not in targets]
        inverse = [0] * n
        for i, a in enumerate(forward):
            inverse[a] = i
        pair = _AXES[key] = (forward, inverse)
    return pair


def _axes(n: int, targets: tuple[int, ...]) -> list[int]:
    return _axes_pair(n, targets)[0]


def _front(state: Ket, targets: tuple[int, ...]) -> np.ndarray:
    """Matrix view with the target qubits as row index (in the given order)."""
    n = state.num_qubits
    t = state.amps.reshape((2,) * n).transpose(_axes(n, targets))
    return t.reshape(1 << len(targets), -1)


def _unfront(mat: np.ndarray, n: int, targets: tuple[int, ...]) -> np.ndarray:
    inverse = _axes_pair(n, targets)[1]
    return mat.reshape((2,) * n).transpose(inverse).reshape(-1)


def apply_unitary(state: Ket, gate, targets: Sequence[int]) -> Ket:
    """Apply ``gate`` to ``targets``; the first target is the gate's leading qubit."""
    targets = _check_targets(state.num_qubits, targets)
    # read-only arrays come from as_unitary or the module constants
    if isinstance(gate, np.ndarray) and not gate.flags.writeable:
        g = gate
    else:
        g = as_unitary(gate)
    if g.shape[0] != 2 ** len(targets):
        raise SizeMismatch(
            f"{g.shape[0]}x{g.shape[0]} gate on {len(targets)} target(s)"
        )
    mat = g @ _front(state, targets)
    return Ket._wrap(_unfront(mat, state.num_qubits, targets))


def permute_qubits(state: Ket, order: Sequence[int]) -> Ket:
    """Reorder the register: new qubit ``k`` is old qubit ``order[k]``."""
    order = _check_targets(state.num_qubits, order)
    if len(order) != state.num_qubits:
        raise SizeMismatch("order must name every qubit exactly once")
    t = state.amps.reshape((2,) * state.num_qubits).transpose(order)
    return Ket._wrap(t.reshape(-1))


def computational_probabilities(state: Ket, target: int) -> np.ndarray:
    (target,) = _check_targets(state.num_qubits, (target,))
    m = _front(state, (target,))
    return [np.vdot(m[0], m[0]).real, np.vdot(m[1], m[1]).real]


def project_computational(state: Ket, target: int, bit: int) -> tuple[float, Ket]:
    """Exact Born probability of ``bit`` on ``target`` and the collapsed state."""
    (target,) = _check_targets(state.num_qubits, (target,))
    m = _front(state, (target,)).copy()
    m[1 - int(bit)] = 0
    p = float(np.vdot(m[bit], m[bit]).real)
    if p < ZERO_PROB:
        raise ZeroProbabilityBranch(f"outcome {bit} on qubit {target} has zero probability", 0.0)
    return p, Ket._make(_unfront(m, state.num_qubits, (target,)))


def _sample(probs: Sequence[float], rng: np.random.Generator) -> int:
    u = rng.random() * sum(probs)
    last = 0
    for i, p in enumerate(probs):
        if p > 0:
            last = i
            u -= p
            if u < 0:
                return i
    return last


def measure_computational(
    state: Ket, target: int, rng: np.random.Generator
) -> tuple[int, Ket]:
    """Born-rule Z measurement; the measured qubit stays in the register."""
    probs = computational_probabilities(state, target)
    bit = _sample(probs, rng)
    _, post = project_computational(state, target, bit)
    return bit, post


def bell_probabilities(state: Ket, targets: Sequence[int]) -> dict[BellOutcome, float]:
    targets = _check_targets(state.num_qubits, targets)
    if len(targets) != 2:
        raise SizeMismatch("a Bell measurement needs exactly two targets")
    c = _BELL_ADJ @ _front(state, targets)
    probs = np.einsum("ij,ij->i", c, c.conj()).real
    return dict(zip(BELL_ORDER, probs.tolist()))


def project_bell(
    state: Ket, targets: Sequence[int], outcome: BellOutcome
) -> tuple[float, Ket]:
    """Exact probability of ``outcome`` and the projected, normalized state.

    Raises :class:`ZeroProbabilityBranch` for an impossible outcome.
    """
    targets = _check_targets(state.num_qubits, targets)
    if len(targets) != 2:
        raise SizeMismatch("a Bell measurement needs exactly two targets")
    k = BELL_ORDER.index(BellOutcome(outcome))
    row = _BELL_ADJ[k] @ _front(state, targets)
    p = float(np.vdot(row, row).real)
    if p < ZERO_PROB:
        raise ZeroProbabilityBranch(f"Bell outcome {outcome} has zero probability", 0.0)
    mat = np.outer(_BELL_MATRIX[:, k], row)
    return p, Ket._make(_unfront(mat, state.num_qubits, targets))


def measure_bell(
    state: Ket, targets: Sequence[int], rng: np.random.Generator
) -> tuple[BellOutcome, Ket]:
    probs = bell_probabilities(state, targets)
    outcome = BELL_ORDER[_sample(list(probs.values()), rng)]
    _, post = project_bell(state, targets, outcome)
    return outcome, post


def fidelity_up_to_phase(a: Ket, b: Ket) -> float:
    """``|<a|b>|^2``, clipped into [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise SizeMismatch(f"{a.num_qubits} vs {b.num_qubits} qubits")
    return float(min(1.0, abs(np.vdot(a.amps, b.amps)) ** 2))


def reduced_density(state: Ket, keep: Sequence[int]) -> np.ndarray:
    """Partial trace over every qubit not in ``keep`` (kept in the given order)."""
    keep = _check_targets(state.num_qubits, keep)
    m = _front(state, keep)
    return m @ m.conj().T


def reduced_density_1q(state: Ket, keep: int) -> np.ndarray:
    return reduced_density(state, (keep,))


def mixed_fidelity(rho: np.ndarray, target: Ket) -> float:
    """``<target| rho |target>`` for a density matrix ``rho``."""
    rho = np.asarray(rho)
    if rho.shape != (len(target), len(target)):
        raise SizeMismatch(f"rho {rho.shape} vs {target.num_qubits}-qubit target")
    v = target.amps
    return float(min(1.0, max(0.0, np.vdot(v, rho @ v).real)))


def collapse(state: Ket, targets: Sequence[int], adjoint: np.ndarray,
             outcome: int | None = None, rng: np.random.Generator | None = None,
             ) -> tuple[int, float, Ket | None]:
    """Measure ``targets`` in the basis whose adjoint is ``adjoint``.

    ``adjoint=None`` means the computational basis.

    Returns ``(index, probability, rest)``.  ``rest`` is the normalized state
    of the unmeasured qubits, or ``None`` when every qubit was measured.
    """
    targets = _check_targets(state.num_qubits, targets)
    rows = _front(state, targets)
    if adjoint is not None:
        rows = adjoint @ rows
    if outcome is None:
        flat = rows.view(np.float64) if rows.flags.c_contiguous else np.abs(rows)
        probs = (flat * flat).sum(axis=1).tolist()
        outcome = _sample(probs, rng)
        p = probs[outcome]
    else:
        p = float(np.vdot(rows[outcome], rows[outcome]).real)
    if p < ZERO_PROB:
        raise ZeroProbabilityBranch(f"outcome {outcome} on {targets} has zero probability", 0.0)
    if len(targets) == state.num_qubits:
        return outcome, p, None
    rest = rows[outcome] * (1 / math.sqrt(p))
    rest.flags.writeable = False
    return outcome, p, Ket(rest, state.num_qubits - len(targets))


def factor_out(state: Ket, qubits: Sequence[int], factor: Ket) -> Ket:
    """Return the remaining-qubit state given ``qubits`` are in ``factor``.

    Computes ``(<factor| x I) |state>``.  ``state`` must be a product of
    ``factor`` on ``qubits`` with something else; anything else raises.
    """
    qubits = _check_targets(state.num_qubits, qubits)
    if len(qubits) != factor.num_qubits:
        raise SizeMismatch("factor size does not match qubit count")
    if len(qubits) == state.num_qubits:
        raise SizeMismatch("nothing left after factoring out every qubit")
    rest = factor.amps.conj() @ _front(state, qubits)
    if abs(np.vdot(rest, rest).real - 1) > 1e-9:
        raise StateError("state does not factor as requested")
    return Ket._make(rest)
