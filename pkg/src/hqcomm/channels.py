"""Secret and channel states for the HQIS family of protocols.

Qubit order of every 4-qubit channel is A, B, C, D (Alice first).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import qcore
from .errors import (
    ChannelError,
    DegenerateOrdering,
    MaximalChannelWarning,
    NonFiniteLambda,
    NotNormalized,
    NotOrthogonal,
    SizeMismatch,
)
from .qcore import Ket

CHANNEL_KINDS = ("omega", "cluster4", "omega-prime", "generic")

_H = 0.5
_R = 1 / math.sqrt(2)


def _ket(entries: dict[str, complex]) -> Ket:
    n = len(next(iter(entries)))
    amps = np.zeros(2**n, dtype=complex)
    for bits, amp in entries.items():
        amps[int(bits, 2)] = amp
    return qcore.ket_from_amplitudes(amps)


def secret_state(lam: complex) -> Ket:
    """``(|0> + lam|1>) / sqrt(1 + |lam|^2)``."""
    lam = complex(lam)
    if not cmath.isfinite(lam):
        raise NonFiniteLambda(f"lambda must be finite, got {lam}")
    scale = 1 / math.hypot(1.0, abs(lam))
    amps = np.array([scale, lam * scale], dtype=complex)
    amps.flags.writeable = False
    return qcore.Ket(amps, 1)


# |psi0>, |psi1> of the agents (B, C, D) for each maximal channel
OMEGA_PSI0 = _ket({"000": _R, "110": _R})
OMEGA_PSI1 = _ket({"001": _R, "111": -_R})
CLUSTER_PSI0 = _ket({"000": _R, "011": _R})
CLUSTER_PSI1 = _ket({"100": _R, "111": -_R})


def omega() -> Ket:
    """½(|0000> + |0110> + |1001> - |1111>)."""
    return _ket({"0000": _H, "0110": _H, "1001": _H, "1111": -_H})


def cluster4() -> Ket:
    """½(|0000> + |0011> + |1100> - |1111>)."""
    return _ket({"0000": _H, "0011": _H, "1100": _H, "1111": -_H})


def check_amplitudes(a: float, b: float, tol: float = 1e-12) -> None:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ChannelError(f"a, b must be finite, got {a}, {b}")
    if abs(a * a + b * b - 1) > tol:
        raise NotNormalized(f"a^2 + b^2 = {a * a + b * b!r}, expected 1")
    if b <= 0:
        raise ChannelError(f"b must be positive, got {b}")
    if b > a:
        raise DegenerateOrdering(f"need a >= b, got a={a}, b={b}")


def omega_prime(a: float, b: float) -> Ket:
    """Non-maximal Omega-type channel ``a|0>|psi0> + b|1>|psi1>``.

    Uses the normalized branch states, so the basis amplitudes are
    ``a/sqrt2`` at 0000 and 0110, ``b/sqrt2`` at 1001, ``-b/sqrt2`` at 1111.
    """
    a, b = float(a), float(b)
    check_amplitudes(a, b)
    if abs(a - b) < 1e-9:
        warnings.warn(
            "a == b gives the maximal Omega channel; the probabilistic scheme "
            "then succeeds with certainty",
            MaximalChannelWarning,
            stacklevel=2,
        )
    return _ket(
        {"0000": a * _R, "0110": a * _R, "1001": b * _R, "1111": -b * _R}
    )


def generic_channel(psi0: Ket, psi1: Ket) -> Ket:
    """``(|0>|psi0> + |1>|psi1>) / sqrt2`` for orthonormal ``psi0``, ``psi1``."""
    if psi0.num_qubits != psi1.num_qubits:
        raise SizeMismatch(f"{psi0.num_qubits} vs {psi1.num_qubits} qubits")
    for name, k in (("psi0", psi0), ("psi1", psi1)):
        if abs(np.linalg.norm(k.amps) - 1) > 1e-12:
            raise NotNormalized(f"{name} is not normalized")
    overlap = abs(np.vdot(psi0.amps, psi1.amps))
    if overlap > 1e-12:
        raise NotOrthogonal(f"|<psi0|psi1>| = {overlap:.3g}")
    return qcore.ket_from_amplitudes(np.concatenate([psi0.amps, psi1.amps]))


@dataclass(frozen=True)
class ChannelSpec:
    """Which channel Alice shares with her agents."""

    kind: str
    a: float | None = None
    b: float | None = None
    psi0: Ket | None = None
    psi1: Ket | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ChannelError(f"unknown channel kind {self.kind!r}")
        if self.kind == "omega-prime":
            check_amplitudes(self.a, self.b)
        if self.kind == "generic":
            generic_channel(self.psi0, self.psi1)

    @classmethod
    def omega(cls) -> "ChannelSpec":
        return cls("omega")

    @classmethod
    def cluster4(cls) -> "ChannelSpec":
        return cls("cluster4")

    @classmethod
    def omega_prime(cls, a: float, b: float) -> "ChannelSpec":
        return cls("omega-prime", a=float(a), b=float(b))

    @classmethod
    def generic(cls, psi0: Ket, psi1: Ket) -> "ChannelSpec":
        return cls("generic", psi0=psi0, psi1=psi1)

    @property
    def maximal(self) -> bool:
        return self.kind != "omega-prime"

    def state(self) -> Ket:
        if self.kind == "omega":
            return omega()
        if self.kind == "cluster4":
            return cluster4()
        if self.kind == "omega-prime":
            return omega_prime(self.a, self.b)
        return generic_channel(self.psi0, self.psi1)

    def branches(self) -> tuple[Ket, Ket]:
        """The agents' ``(psi0, psi1)`` pair."""
        if self.kind in ("omega", "omega-prime"):
            return OMEGA_PSI0, OMEGA_PSI1
        if self.kind == "cluster4":
            return CLUSTER_PSI0, CLUSTER_PSI1
        return self.psi0, self.psi1

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "omega-prime":
            d.update(a=self.a, b=self.b)
        if self.kind == "generic":
            d.update(
                psi0=[[z.real, z.imag] for z in self.psi0.amps.tolist()],
                psi1=[[z.real, z.imag] for z in self.psi1.amps.tolist()],
            )
        return d
