"""Perfect hierarchical quantum information splitting (HQIS).

Alice Bell-measures her secret qubit together with her half of a maximal
4-qubit channel.  One agent then rebuilds the secret with a Pauli correction.
The *powerful* agent needs only one helper's computational-basis bit.  A
*weak* agent needs the other two agents' joint Bell outcome.

Everything runs in the Omega-channel frame.  The roles ``b``, ``c``, ``d`` are
Omega's Bob, Charlie and Diana, and ``d`` is the powerful one.  The cluster
channel is the Omega channel with B and D swapped, and Charlie is Bob with B
and C swapped, so both reuse the same two lookup tables.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .channels import ChannelSpec, secret_state
from .errors import UnsupportedChannelForPerfectPath, ZeroProbabilityBranch
from .qcore import BELL_ORDER, BellOutcome, Ket
from .register import Register

PSI_P, PSI_M, PHI_P, PHI_M = BELL_ORDER


class Party(str, enum.Enum):
    ALICE = "Alice"
    BOB = "Bob"
    CHARLIE = "Charlie"
    DIANA = "Diana"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> "Party":
        if isinstance(value, cls):
            return value
        try:
            return _PARTY_NAMES[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown party {value!r}") from None

    @property
    def qubit(self) -> str:
        return self.value[0]


_PARTY_NAMES = {p.value.lower(): p for p in Party}

_IY = np.array([[0, 1], [-1, 0]], dtype=complex)
_XZ = qcore.X @ qcore.Z


class PauliCorrection(str, enum.Enum):
    I = "I"  # noqa: E741
    X = "X"
    Z = "Z"
    XZ = "XZ"
    IY = "iY"

    def __str__(self) -> str:
        return self.value

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self]


_PAULI_MATRICES = {
    PauliCorrection.I: qcore.I2,
    PauliCorrection.X: qcore.X,
    PauliCorrection.Z: qcore.Z,
    PauliCorrection.XZ: _XZ,  # Z first, then X
    PauliCorrection.IY: _IY,
}
for _m in _PAULI_MATRICES.values():
    _m.flags.writeable = False

_P = PauliCorrection

# (Alice outcome, Bob/Charlie bit) -> Diana's correction
DIANA_TABLE = {
    (PSI_P, 0): _P.I,
    (PSI_P, 1): _P.Z,
    (PSI_M, 0): _P.Z,
    (PSI_M, 1): _P.I,
    (PHI_P, 0): _P.X,
    (PHI_P, 1): _P.XZ,
    (PHI_M, 0): _P.XZ,
    (PHI_M, 1): _P.X,
}

# (Alice outcome, Charlie-Diana joint outcome) -> Bob's correction
BOB_TABLE = {
    (PSI_P, PSI_P): _P.Z,
    (PSI_P, PSI_M): _P.I,
    (PSI_P, PHI_P): _P.X,
    (PSI_P, PHI_M): _P.XZ,
    (PSI_M, PSI_P): _P.I,
    (PSI_M, PSI_M): _P.Z,
    (PSI_M, PHI_P): _P.XZ,
    (PSI_M, PHI_M): _P.X,
    (PHI_P, PHI_P): _P.I,
    (PHI_P, PHI_M): _P.Z,
    (PHI_P, PSI_P): _P.XZ,
    (PHI_P, PSI_M): _P.X,
    (PHI_M, PHI_P): _P.Z,
    (PHI_M, PHI_M): _P.I,
    (PHI_M, PSI_P): _P.X,
    (PHI_M, PSI_M): _P.XZ,
}


# Receiver's state before correction, as (|0>, |1>) coefficients in lambda,
# up to normalization and global phase.
DIANA_STATES = {
    (PSI_P, 0): lambda l: (1, l),
    (PSI_P, 1): lambda l: (1, -l),
    (PSI_M, 0): lambda l: (1, -l),
    (PSI_M, 1): lambda l: (1, l),
    (PHI_P, 0): lambda l: (l, 1),
    (PHI_P, 1): lambda l: (-l, 1),
    (PHI_M, 0): lambda l: (-l, 1),
    (PHI_M, 1): lambda l: (l, 1),
}

BOB_STATES = {
    (PSI_P, PSI_P): lambda l: (1, -l),
    (PSI_P, PSI_M): lambda l: (1, l),
    (PSI_P, PHI_P): lambda l: (l, 1),
    (PSI_P, PHI_M): lambda l: (-l, 1),
    (PSI_M, PSI_P): lambda l: (1, l),
    (PSI_M, PSI_M): lambda l: (1, -l),
    (PSI_M, PHI_P): lambda l: (-l, 1),
    (PSI_M, PHI_M): lambda l: (l, 1),
    (PHI_P, PHI_P): lambda l: (1, l),
    (PHI_P, PHI_M): lambda l: (1, -l),
    (PHI_P, PSI_P): lambda l: (-l, 1),
    (PHI_P, PSI_M): lambda l: (l, 1),
    (PHI_M, PHI_P): lambda l: (1, -l),
    (PHI_M, PHI_M): lambda l: (1, l),
    (PHI_M, PSI_P): lambda l: (l, 1),
    (PHI_M, PSI_M): lambda l: (-l, 1),
}


def correction_for_diana(alice: BellOutcome, bc: int) -> PauliCorrection:
    return DIANA_TABLE[BellOutcome(alice), int(bc)]


def correction_for_bob(alice: BellOutcome, cd: BellOutcome) -> PauliCorrection:
    return BOB_TABLE[BellOutcome(alice), BellOutcome(cd)]


# canonical role -> physical qubit, per channel
ROLE_FRAMES = {
    "omega": {"b": "B", "c": "C", "d": "D"},
    "omega-prime": {"b": "B", "c": "C", "d": "D"},
    "cluster4": {"b": "D", "c": "C", "d": "B"},
}

_QUBIT_PARTY = {"B": Party.BOB, "C": Party.CHARLIE, "D": Party.DIANA}


def role_of(channel_kind: str, party: Party) -> str:
    frame = ROLE_FRAMES[channel_kind]
    return next(r for r, q in frame.items() if q == Party.parse(party).qubit)


def party_of(channel_kind: str, role: str) -> Party:
    return _QUBIT_PARTY[ROLE_FRAMES[channel_kind][role]]


def powerful_party(channel_kind: str) -> Party:
    return party_of(channel_kind, "d")


@dataclass
class ProtocolTranscript:
    channel: dict
    lam: complex
    receiver: str
    alice_outcome: BellOutcome
    helper_outcomes: list
    correction: PauliCorrection
    final_state: Ket | None
    fidelity: float
    classical_bits_consumed_by_receiver: int
    probability: float = 1.0
    pre_correction_state: Ket | None = None
    holdings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "lambda": [self.lam.real, self.lam.imag],
            "receiver": self.receiver,
            "alice_outcome": str(self.alice_outcome),
            "helper_outcomes": [[p, str(v) if isinstance(v, BellOutcome) else v]
                                for p, v in self.helper_outcomes],
            "correction": str(self.correction),
            "fidelity": self.fidelity,
            "classical_bits_consumed_by_receiver": self.classical_bits_consumed_by_receiver,
            "probability": self.probability,
            "holdings": self.holdings,
        }


def default_holdings() -> dict:
    return {"Alice": ["S", "A"], "Bob": ["B"], "Charlie": ["C"], "Diana": ["D"]}


def _forced(forced: dict | None, key: str):
    return None if forced is None else forced.get(key)


def alice_step(reg: Register, rng, forced=None, secret="S", alice="A"):
    """Alice's Bell measurement on (secret, her channel qubit)."""
    return reg.bell_measure(secret, alice, rng=rng, outcome=_forced(forced, "alice"))


def helper_step(reg: Register, frame: dict, receiver_role: str, helper_role: str | None,
                rng, forced=None, qubits=None):
    """Agents' measurements feeding the receiver.

    Returns ``(helper_outcomes, key, probability, bits_to_receiver)`` where
    ``key`` is the value the receiver looks up in its table.  ``qubits`` maps
    physical channel labels (``"B"``...) to register labels when they differ.
    """
    qubits = qubits or {}
    phys = {r: qubits.get(frame[r], frame[r]) for r in frame}
    if receiver_role == "d":
        helper_role = helper_role or "b"
        bit, p = reg.measure(phys[helper_role], rng=rng, outcome=_forced(forced, "helper"))
        return [(frame[helper_role], bit)], bit, p, 3
    pair = ("c", "d") if receiver_role == "b" else ("b", "d")
    outcome, p = reg.bell_measure(phys[pair[0]], phys[pair[1]], rng=rng,
                                  outcome=_forced(forced, "helper"))
    return [(frame[pair[0]] + frame[pair[1]], outcome)], outcome, p, 4


def lookup(receiver_role: str, alice: BellOutcome, key) -> PauliCorrection:
    if receiver_role == "d":
        return correction_for_diana(alice, key)
    return correction_for_bob(alice, key)


def _check_perfect(channel: ChannelSpec) -> None:
    if channel.kind not in ("omega", "cluster4"):
        raise UnsupportedChannelForPerfectPath(
            f"perfect HQIS needs the omega or cluster4 channel, got {channel.kind}"
        )


def recover_on_register(reg: Register, channel_kind: str, receiver, lam: complex, *,
                        rng=None, forced: dict | None = None, helper=None,
                        qubits: dict | None = None, secret_label: str = "S",
                        holdings: dict | None = None) -> ProtocolTranscript:
    """Run the secret phase on qubits already living in ``reg``.

    ``qubits`` maps the channel's physical names ``"A"``..``"D"`` to register
    labels (identity by default); the secret must already sit at
    ``secret_label``.  The receiver's fidelity is computed from its reduced
    state, so damaged (mixed) channels are scored correctly.
    """
    receiver = Party.parse(receiver)
    receiver_role = role_of(channel_kind, receiver)
    helper_role = None
    if helper is not None:
        helper_role = role_of(channel_kind, helper)
        if receiver_role != "d" or helper_role == "d":
            raise ValueError(f"{helper} cannot act as helper for {receiver}")
    frame = ROLE_FRAMES[channel_kind]
    qubits = qubits or {}
    secret = secret_state(lam)

    alice, p1 = alice_step(reg, rng, forced, secret=secret_label,
                           alice=qubits.get("A", "A"))
    helpers, key, p2, bits = helper_step(reg, frame, receiver_role, helper_role,
                                         rng, forced, qubits=qubits)
    correction = lookup(receiver_role, alice, key)

    target = qubits.get(frame[receiver_role], frame[receiver_role])
    pre = reg.pure_state(target)
    reg.apply(correction.matrix, [target])
    return ProtocolTranscript(
        channel={"kind": channel_kind},
        lam=complex(lam),
        receiver=str(receiver),
        alice_outcome=alice,
        helper_outcomes=helpers,
        correction=correction,
        final_state=reg.pure_state(target),
        fidelity=reg.fidelity(target, secret),
        classical_bits_consumed_by_receiver=bits,
        probability=p1 * p2,
        pre_correction_state=pre,
        holdings=holdings or default_holdings(),
    )


def hqis_branch(channel: ChannelSpec, receiver, lam: complex, *, rng=None,
                forced: dict | None = None, helper=None,
                holdings: dict | None = None) -> ProtocolTranscript:
    """One protocol run; sampled with ``rng`` or pinned by ``forced``.

    ``forced`` may fix ``"alice"`` (a :class:`BellOutcome`) and ``"helper"``
    (a bit on the powerful path, a Bell outcome otherwise).  Impossible
    forced branches raise :class:`ZeroProbabilityBranch`.
    """
    _check_perfect(channel)
    reg = Register()
    reg.add(["S"], secret_state(lam))
    reg.add(["A", "B", "C", "D"], channel.state())
    t = recover_on_register(reg, channel.kind, receiver, lam, rng=rng, forced=forced,
                            helper=helper, holdings=holdings)
    t.channel = channel.to_dict()
    return t


def run_hqis(channel: ChannelSpec, receiver, lam: complex, rng: np.random.Generator,
             helper=None, holdings: dict | None = None) -> ProtocolTranscript:
    """Sampled perfect-HQIS run.

    ``helper`` picks which weak agent measures on the powerful path (default:
    the one in Bob's Omega role).  ``holdings`` only annotates the transcript,
    e.g. ``{"Bob1": ["C", "D"], "Bob2": ["B"]}`` for one agent holding two qubits.
    """
    return hqis_branch(channel, receiver, lam, rng=rng, helper=helper, holdings=holdings)


def enumerate_hqis(channel: ChannelSpec, receiver, lam: complex,
                   helper=None) -> list[ProtocolTranscript]:
    """Every reachable (Alice, helper) branch, each with its exact probability."""
    receiver_role = role_of(channel.kind, receiver)
    helper_values = (0, 1) if receiver_role == "d" else BELL_ORDER
    out = []
    for alice in BELL_ORDER:
        for h in helper_values:
            try:
                out.append(hqis_branch(channel, receiver, lam, helper=helper,
                                       forced={"alice": alice, "helper": h}))
            except ZeroProbabilityBranch:
                continue
    return out


def agent_state(channel_state: Ket, lam: complex, alice: BellOutcome) -> tuple[float, Ket]:
    """Probability of Alice's outcome and the agents' joint state after it."""
    joint = qcore.tensor(secret_state(lam), channel_state)
    p, post = qcore.project_bell(joint, (0, 1), alice)
    return p, qcore.factor_out(post, (0, 1), qcore.bell_state(alice))


@dataclass
class EncryptionReport:
    channel: str
    lam: complex
    receiver: str
    # per Alice outcome: weak receiver's reduced density matrix
    densities: dict
    max_deviation: float
    # per Alice outcome: {joint outcome: (pauli label, conditional probability)}
    branches: dict
    # no-signaling: weighted average of the powerful agent's state vs before Alice
    powerful_average_deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "lambda": [self.lam.real, self.lam.imag],
            "receiver": self.receiver,
            "max_deviation": self.max_deviation,
            "powerful_average_deviation": self.powerful_average_deviation,
            "branches": {str(k): {str(o): [lab, p] for o, (lab, p) in v.items()}
                         for k, v in self.branches.items()},
            "passed": self.passed,
        }


_EQ11_PAULIS = (_P.I, _P.Z, _P.X, _P.IY)


def verify_encryption(channel: ChannelSpec, lam: complex, tol: float = 1e-12) -> EncryptionReport:
    """Check that the weak receiver alone holds a maximally mixed qubit.

    For each Alice outcome the weak receiver's reduced state must be I/2, and
    each joint outcome of the other two agents must leave a Pauli image of the
    secret with conditional probability 1/4.
    """
    _check_perfect(channel)
    frame = ROLE_FRAMES[channel.kind]
    idx = {q: i for i, q in enumerate("BCD")}
    weak, strong = idx[frame["b"]], idx[frame["d"]]
    pair = (idx[frame["c"]], idx[frame["d"]])
    secret = secret_state(lam)
    half_eye = np.eye(2) / 2

    densities, branches, deviations = {}, {}, []
    strong_avg = np.zeros((2, 2), dtype=complex)
    ok = True
    for alice in BELL_ORDER:
        p_alice, agents = agent_state(channel.state(), lam, alice)
        rho = qcore.reduced_density_1q(agents, weak)
        densities[alice] = rho
        deviations.append(float(np.max(np.abs(rho - half_eye))))
        strong_avg += p_alice * qcore.reduced_density_1q(agents, strong)

        branches[alice] = {}
        for cd in BELL_ORDER:
            p, post = qcore.project_bell(agents, pair, cd)
            rest = qcore.factor_out(post, pair, qcore.bell_state(cd))
            label = next(
                (str(op) for op in _EQ11_PAULIS
                 if abs(qcore.fidelity_up_to_phase(
                     rest, qcore.apply_unitary(secret, op.matrix, (0,))) - 1) < tol),
                None,
            )
            branches[alice][cd] = (label, p)
            ok &= label is not None and abs(p - 0.25) < tol

    before = qcore.reduced_density_1q(channel.state(), 1 + strong)
    strong_dev = float(np.max(np.abs(strong_avg - before)))
    max_dev = max(deviations)
    ok &= max_dev < tol and strong_dev < tol
    return EncryptionReport(
        channel=channel.kind,
        lam=complex(lam),
        receiver=str(party_of(channel.kind, "b")),
        densities=densities,
        max_deviation=max_dev,
        branches=branches,
        powerful_average_deviation=strong_dev,
        passed=bool(ok),
    )


def role_swap_check(lam: complex, tol: float = 1e-12) -> bool:
    """Omega's (B, C, D) agent state equals the cluster's (D, C, B) one, per outcome."""
    for alice in BELL_ORDER:
        _, om = agent_state(ChannelSpec.omega().state(), lam, alice)
        _, cl = agent_state(ChannelSpec.cluster4().state(), lam, alice)
        if not om.allclose(qcore.permute_qubits(cl, (2, 1, 0)), atol=tol):
            return False
    return True


def dishonest_receiver_attack(channel: ChannelSpec, lam: complex,
                              rng: np.random.Generator) -> ProtocolTranscript:
    """A weak agent who captured all three agent qubits recovers alone.

    The cheat Bell-measures the other two qubits and applies the weak-path
    table, so no cooperation is needed.
    """
    _check_perfect(channel)
    cheat = party_of(channel.kind, "b")
    return hqis_branch(channel, cheat, lam, rng=rng,
                       holdings={"Alice": ["S", "A"], str(cheat): ["B", "C", "D"]})
