"""Hierarchical quantum secret sharing with decoy-qubit eavesdropping checks.

One session proceeds as follows:

1. Alice prepares ``n`` copies of the Omega state.  Qubit ``p(4l-3+k)`` is
   the k-th qubit of copy ``l``.
2. The first qubits form ``P_A`` and the second, third and fourth form
   ``P_B``, ``P_C`` and ``P_D``.  Each agent sequence gets ``n`` random decoys
   from {|0>, |1>, |+>, |->} appended.  The same random permutation of the
   ``2n`` slots is then applied to all three sequences.
3. The sequences travel to Bob, Charlie and Diana, where an adversary may act.
4. Alice reveals the decoy slots.  Each agent measures every decoy in a
   random Z/X basis, and Alice scores the rounds whose basis matched her
   preparation.  Too many errors aborts the session.
5. Alice reveals the signal slots.  Each agent restores the original order,
   and perfect HQIS runs once per copy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .channels import ChannelSpec, omega, secret_state
from .errors import CopyCountOutOfRange
from .hqis import (
    Party,
    ProtocolTranscript,
    correction_for_bob,
    dishonest_receiver_attack,
    recover_on_register,
)
from .register import Register

MAX_COPIES = 3
AGENT_SEQUENCES = ("B", "C", "D")


class DecoyState(str, enum.Enum):
    Z0 = "Z0"
    Z1 = "Z1"
    XPLUS = "Xplus"
    XMINUS = "Xminus"

    def __str__(self) -> str:
        return self.value

    @property
    def basis(self) -> str:
        return self.value[0]

    @property
    def bit(self) -> int:
        return int(self in (DecoyState.Z1, DecoyState.XMINUS))

    @property
    def ket(self) -> qcore.Ket:
        k = qcore.basis_ket(str(self.bit))
        return qcore.apply_unitary(k, qcore.H, (0,)) if self.basis == "X" else k


DECOY_STATES = tuple(DecoyState)


@dataclass
class SequencePlan:
    """Alice's private bookkeeping for one distribution round.

    ``permutation[j]`` is the pre-permutation slot sent in position ``j``, so
    ``sent[s][j] == primed[s][permutation[j]]``.
    """

    n: int
    p_a: list[str]
    p_b: list[str]
    p_c: list[str]
    p_d: list[str]
    primed: dict[str, list[str]]
    permutation: list[int]
    decoys: dict[str, DecoyState]
    # (sequence, pre-permutation slot, state)
    decoy_records: list[tuple[str, int, DecoyState]]

    @property
    def sent(self) -> dict[str, list[str]]:
        return {s: [seq[k] for k in self.permutation] for s, seq in self.primed.items()}

    def decoy_coordinates(self) -> list[int]:
        """Post-permutation positions holding decoys (the same in every sequence)."""
        return [j for j, k in enumerate(self.permutation) if k >= self.n]

    def signal_coordinates(self) -> list[int]:
        """Post-permutation positions of the signal qubits, in original order."""
        inverse = np.argsort(self.permutation)
        return [int(inverse[k]) for k in range(self.n)]

    def copy_qubits(self, copy: int) -> dict[str, str]:
        """Physical channel name -> register label for copy ``copy`` (0-based)."""
        return {"A": self.p_a[copy], "B": self.p_b[copy],
                "C": self.p_c[copy], "D": self.p_d[copy]}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "P_A": self.p_a,
            "P_B": self.p_b,
            "P_C": self.p_c,
            "P_D": self.p_d,
            "primed": self.primed,
            "permutation": self.permutation,
            "decoy_records": [[s, k, str(d)] for s, k, d in self.decoy_records],
        }


def rearrange(received: list[str], signal_coordinates: list[int]) -> list[str]:
    """Agent-side reordering once Alice discloses the signal coordinates."""
    return [received[j] for j in signal_coordinates]


def prepare_distribution(n: int, rng: np.random.Generator) -> tuple[SequencePlan, Register]:
    if not 1 <= n <= MAX_COPIES:
        raise CopyCountOutOfRange(f"n must be in 1..{MAX_COPIES}, got {n}")
    reg = Register()
    labels = [f"p{i}" for i in range(1, 4 * n + 1)]
    for copy in range(n):
        reg.add(labels[4 * copy: 4 * copy + 4], omega())
    p_a, p_b, p_c, p_d = (labels[k::4] for k in range(4))

    decoys: dict[str, DecoyState] = {}
    for i in range(1, 3 * n + 1):
        state = DECOY_STATES[int(rng.integers(4))]
        decoys[f"d{i}"] = state
        reg.add([f"d{i}"], state.ket)
    names = list(decoys)
    primed = {
        "B": p_b + names[:n],
        "C": p_c + names[n:2 * n],
        "D": p_d + names[2 * n:],
    }
    records = [(s, k, decoys[primed[s][k]]) for s in AGENT_SEQUENCES for k in range(n, 2 * n)]
    perm = [int(k) for k in rng.permutation(2 * n)]
    return SequencePlan(n, p_a, p_b, p_c, p_d, primed, perm, decoys, records), reg


@dataclass(frozen=True)
class AdversaryModel:
    kind: str = "none"
    targets: tuple[str, ...] = AGENT_SEQUENCES
    probability: float = 1.0

    KINDS = ("none", "intercept-resend", "dishonest-bob")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown adversary {self.kind!r}")
        if not 0 <= self.probability <= 1:
            raise ValueError(f"intercept probability {self.probability} outside [0, 1]")
        if set(self.targets) - set(AGENT_SEQUENCES):
            raise ValueError(f"targets must be among {AGENT_SEQUENCES}")

    @classmethod
    def none(cls) -> "AdversaryModel":
        return cls("none")

    @classmethod
    def intercept_resend(cls, probability: float = 1.0,
                         targets=AGENT_SEQUENCES) -> "AdversaryModel":
        return cls("intercept-resend", tuple(targets), float(probability))

    @classmethod
    def dishonest_bob(cls) -> "AdversaryModel":
        return cls("dishonest-bob", ("C", "D"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "targets": list(self.targets),
                "probability": self.probability}


@dataclass
class AdversaryLog:
    # (sequence, slot, label, basis, bit)
    intercepts: list = field(default_factory=list)
    captured: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"intercepts": [list(x) for x in self.intercepts], "captured": self.captured}


def transmit_with_adversary(plan: SequencePlan, reg: Register, adversary: AdversaryModel,
                            rng: np.random.Generator) -> tuple[Register, AdversaryLog]:
    """Deliver the permuted sequences, letting ``adversary`` act in transit.

    Intercept-resend measures each targeted slot (signal or decoy alike) in a
    random basis and forwards the eigenstate it found.  Dishonest-Bob capture
    only records which slots he now holds.  What he does with them is up to
    the caller (see :func:`attack_effectiveness_study`).
    """
    reg = reg.copy()
    log = AdversaryLog()
    sent = plan.sent
    if adversary.kind == "intercept-resend":
        for s in adversary.targets:
            for j, label in enumerate(sent[s]):
                if rng.random() < adversary.probability:
                    basis = "ZX"[int(rng.integers(2))]
                    bit, _ = reg.measure(label, rng=rng, basis=basis)
                    log.intercepts.append((s, j, label, basis, bit))
    elif adversary.kind == "dishonest-bob":
        log.captured = {s: list(sent[s]) for s in adversary.targets}
    return reg, log


@dataclass
class CheckReport:
    decoys_checked: int
    bases_matched: int
    errors: int
    error_rate: float
    aborted: bool
    threshold: float
    # one entry per decoy: (sequence, slot, prepared, agent basis, agent bit)
    rounds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "decoys_checked": self.decoys_checked,
            "bases_matched": self.bases_matched,
            "errors": self.errors,
            "error_rate": self.error_rate,
            "aborted": self.aborted,
            "threshold": self.threshold,
            "rounds": [[s, j, str(d), b, bit] for s, j, d, b, bit in self.rounds],
        }


def run_check(plan: SequencePlan, reg: Register, threshold: float,
              rng: np.random.Generator) -> CheckReport:
    """Decoy-based eavesdropping check; measures (and so consumes) every decoy."""
    sent = plan.sent
    rounds, matched, errors = [], 0, 0
    for s in AGENT_SEQUENCES:
        for j in plan.decoy_coordinates():
            label = sent[s][j]
            basis = "ZX"[int(rng.integers(2))]
            bit, _ = reg.measure(label, rng=rng, basis=basis)
            prepared = plan.decoys[label]
            rounds.append((s, j, prepared, basis, bit))
            if basis == prepared.basis:
                matched += 1
                errors += bit != prepared.bit
    rate = errors / max(matched, 1)
    return CheckReport(len(rounds), matched, errors, rate, rate > threshold, threshold, rounds)


@dataclass
class HqssTranscript:
    plan: SequencePlan
    adversary: AdversaryModel
    adversary_log: AdversaryLog
    check: CheckReport
    copies: list[ProtocolTranscript]

    @property
    def aborted(self) -> bool:
        return self.check.aborted

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "adversary": self.adversary.to_dict(),
            "adversary_log": self.adversary_log.to_dict(),
            "check": self.check.to_dict(),
            "aborted": self.aborted,
            "copies": [c.to_dict() for c in self.copies],
        }


def secret_phase(plan: SequencePlan, reg: Register, lam: complex, receiver,
                 rng: np.random.Generator, helper=None) -> list[ProtocolTranscript]:
    """Signal-slot disclosure, reordering, then one HQIS round per copy."""
    coords = plan.signal_coordinates()
    restored = {s: rearrange(seq, coords) for s, seq in plan.sent.items()}
    if (restored["B"], restored["C"], restored["D"]) != (plan.p_b, plan.p_c, plan.p_d):
        raise AssertionError("signal coordinates do not invert the permutation")
    out = []
    for copy in range(plan.n):
        qubits = plan.copy_qubits(copy)
        secret_label = f"s{copy + 1}"
        reg.add([secret_label], secret_state(lam))
        out.append(recover_on_register(
            reg, "omega", receiver, lam, rng=rng, helper=helper, qubits=qubits,
            secret_label=secret_label,
            holdings={"Alice": [secret_label, qubits["A"]], "Bob": [qubits["B"]],
                      "Charlie": [qubits["C"]], "Diana": [qubits["D"]]},
        ))
    return out


def run_hqss(n: int, lam: complex, receiver, adversary: AdversaryModel | None,
             threshold: float, rng: np.random.Generator, helper=None) -> HqssTranscript:
    """A full session.  An abort returns the transcript with no secret phase."""
    adversary = adversary or AdversaryModel.none()
    plan, reg = prepare_distribution(n, rng)
    reg, log = transmit_with_adversary(plan, reg, adversary, rng)
    check = run_check(plan, reg, threshold, rng)
    copies = [] if check.aborted else secret_phase(plan, reg, lam, receiver, rng, helper)
    return HqssTranscript(plan, adversary, log, check, copies)


@dataclass
class AttackReport:
    lam: complex
    n: int
    bare_fidelity: float
    # per copy: Bob's fidelity without cooperation, and whether his blind pairing hit
    hqss_fidelities: list[float]
    correct_pairings: list[bool]
    check: CheckReport

    @property
    def detected(self) -> bool:
        return self.check.errors > 0

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "n": self.n,
            "bare_fidelity": self.bare_fidelity,
            "hqss_fidelities": self.hqss_fidelities,
            "correct_pairings": self.correct_pairings,
            "detected": self.detected,
            "check": self.check.to_dict(),
        }


def attack_effectiveness_study(n: int, lam: complex, rng: np.random.Generator,
                               threshold: float = 0.0) -> AttackReport:
    """Dishonest Bob against bare HQIS and against the full HQSS session.

    Without decoys Bob holds all three agent qubits and recovers the secret
    alone.  Under HQSS he receives permuted sequences and cannot tell signal
    from decoy before Alice's disclosures.  His blind strategy is to
    Bell-measure Charlie's slot ``i`` with Diana's slot ``sigma(i)`` for a
    random pairing ``sigma`` and forward the qubits.  After the check,
    and whether or not it aborts, Alice's outcome is revealed.  Bob then
    applies the weak-path table using the outcome of the pair that contains
    his copy's Charlie qubit.
    """
    bare = dishonest_receiver_attack(ChannelSpec.omega(), lam, rng)

    plan, reg = prepare_distribution(n, rng)
    reg, log = transmit_with_adversary(plan, reg, AdversaryModel.dishonest_bob(), rng)
    c_seq, d_seq = log.captured["C"], log.captured["D"]
    sigma = [int(k) for k in rng.permutation(2 * n)]
    pair_outcome = {}
    for i, label in enumerate(c_seq):
        outcome, _ = reg.bell_measure(label, d_seq[sigma[i]], rng=rng)
        pair_outcome[i] = outcome
    check = run_check(plan, reg, threshold, rng)

    fidelities, hits = [], []
    for copy in range(n):
        q = plan.copy_qubits(copy)
        secret = secret_state(lam)
        reg.add([f"s{copy + 1}"], secret)
        alice, _ = reg.bell_measure(f"s{copy + 1}", q["A"], rng=rng)
        i = c_seq.index(q["C"])
        hits.append(d_seq[sigma[i]] == q["D"])
        reg.apply(correction_for_bob(alice, pair_outcome[i]).matrix, [q["B"]])
        fidelities.append(reg.fidelity(q["B"], secret))
    return AttackReport(complex(lam), n, bare.fidelity, fidelities, hits, check)


__all__ = [
    "AdversaryLog",
    "AdversaryModel",
    "AttackReport",
    "CheckReport",
    "DecoyState",
    "HqssTranscript",
    "Party",
    "SequencePlan",
    "attack_effectiveness_study",
    "prepare_distribution",
    "rearrange",
    "run_check",
    "run_hqss",
    "secret_phase",
    "transmit_with_adversary",
]
