"""Probabilistic HQIS over the non-maximal Omega-type channel.

After the perfect-HQIS measurements the receiver holds ``a|0> + c b|1>`` (or the
mirrored state with ``a`` on ``|1>``).  Here ``c`` carries the secret.  The
receiver attaches an ancilla in ``|0>`` and applies a two-qubit unitary that
levels the two amplitudes.  Ancilla outcome 0 then leaves a Pauli image of
the secret.  Ancilla outcome 1 leaves ``|1>`` and the run fails.

Operator choice: ``U`` is used whenever the receiver's ``|0>`` amplitude
carries ``a``, and ``U1 = U (X x I)`` when ``a`` sits on ``|1>``.  For Diana
that is every row.  For Bob it is ``U`` exactly when the Charlie-Diana
outcome is a psi state.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .channels import ChannelSpec, check_amplitudes, secret_state
from .errors import ZeroProbabilityBranch
from .hqis import (
    PHI_M,
    PHI_P,
    PSI_M,
    PSI_P,
    ROLE_FRAMES,
    Party,
    PauliCorrection,
    ProtocolTranscript,
    alice_step,
    default_holdings,
    helper_step,
    role_of,
)
from .qcore import BELL_ORDER, BellOutcome
from .register import Register

_P = PauliCorrection


@functools.lru_cache(maxsize=64)
def u_matrix(a: float, b: float) -> np.ndarray:
    """The amplitude-levelling unitary on (receiver, ancilla)."""
    check_amplitudes(a, b)
    r = b / a
    s = math.sqrt(max(0.0, 1 - r * r))
    return qcore.as_unitary(
        [
            [r, s, 0, 0],
            [0, 0, 0, -1],
            [0, 0, 1, 0],
            [s, -r, 0, 0],
        ]
    )


@functools.lru_cache(maxsize=64)
def u1_matrix(a: float, b: float) -> np.ndarray:
    """``U (X x I)``: bit-flip the receiver qubit, then ``U``."""
    return qcore.as_unitary(u_matrix(a, b) @ np.kron(qcore.X, qcore.I2))


# Diana's table: (Alice, Bob bit) -> correction after ancilla 0,
# plus the pre-correction state as (|0> coeff, |1> coeff) functions of lambda.
DIANA_PROB_TABLE = {
    (PSI_P, 0): (_P.I, lambda l: (1, l)),
    (PSI_M, 0): (_P.Z, lambda l: (1, -l)),
    (PHI_P, 0): (_P.X, lambda l: (l, 1)),
    (PHI_M, 0): (_P.IY, lambda l: (-l, 1)),
    (PSI_P, 1): (_P.Z, lambda l: (1, -l)),
    (PSI_M, 1): (_P.I, lambda l: (1, l)),
    (PHI_P, 1): (_P.IY, lambda l: (l, -1)),
    (PHI_M, 1): (_P.X, lambda l: (-l, -1)),
}

# Bob's table: (Alice, CD) -> (printed two-qubit op, correction, state)
BOB_PROB_TABLE = {
    (PSI_P, PSI_P): ("U", _P.Z, lambda l: (1, -l)),
    (PSI_P, PSI_M): ("U", _P.I, lambda l: (1, l)),
    (PSI_M, PSI_P): ("U", _P.I, lambda l: (1, l)),
    (PSI_M, PSI_M): ("U", _P.Z, lambda l: (1, -l)),
    (PHI_P, PSI_P): ("U", _P.XZ, lambda l: (l, -1)),
    (PHI_P, PSI_M): ("U", _P.X, lambda l: (l, 1)),
    (PHI_M, PSI_P): ("U", _P.X, lambda l: (-l, -1)),
    # printed as U1, although the operator rule (psi outcome -> U) says U
    (PHI_M, PSI_M): ("U1", _P.XZ, lambda l: (-l, 1)),
    (PSI_P, PHI_P): ("U1", _P.I, lambda l: (1, l)),
    (PSI_P, PHI_M): ("U1", _P.Z, lambda l: (-1, l)),
    (PSI_M, PHI_P): ("U1", _P.Z, lambda l: (1, -l)),
    (PSI_M, PHI_M): ("U1", _P.I, lambda l: (-1, -l)),
    (PHI_P, PHI_P): ("U1", _P.X, lambda l: (l, 1)),
    (PHI_P, PHI_M): ("U1", _P.XZ, lambda l: (-l, 1)),
    (PHI_M, PHI_P): ("U1", _P.XZ, lambda l: (-l, 1)),
    (PHI_M, PHI_M): ("U1", _P.X, lambda l: (l, 1)),
}

BOB_PROB_DISCREPANCY = (PHI_M, PSI_M)


@functools.lru_cache(maxsize=64)
def _channel(a: float, b: float) -> tuple[dict, qcore.Ket]:
    channel = ChannelSpec.omega_prime(a, b)
    return channel.to_dict(), channel.state()


def two_qubit_op_for(receiver: Party, helper_value) -> str:
    if receiver == Party.DIANA:
        return "U"
    return "U" if BellOutcome(helper_value).is_psi else "U1"


def correction_for(receiver: Party, alice: BellOutcome, helper_value) -> PauliCorrection:
    if receiver == Party.DIANA:
        return DIANA_PROB_TABLE[alice, int(helper_value)][0]
    return BOB_PROB_TABLE[alice, BellOutcome(helper_value)][1]


@dataclass
class ProbTranscript(ProtocolTranscript):
    ancilla_outcome: int = 0
    two_qubit_op: str = "U"
    succeeded: bool = False
    # receiver state after the ancilla reads 0, before the Pauli correction
    conditional_state: qcore.Ket | None = None

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(
            ancilla_outcome=self.ancilla_outcome,
            two_qubit_op=self.two_qubit_op,
            succeeded=self.succeeded,
        )
        return d


def _receiver(receiver) -> Party:
    receiver = Party.parse(receiver)
    if receiver not in (Party.DIANA, Party.BOB):
        raise ValueError(f"probabilistic HQIS supports Diana or Bob, got {receiver}")
    return receiver


def phqis_branch(receiver, a: float, b: float, lam: complex, *, rng=None,
                 forced: dict | None = None, two_qubit_op: str | None = None,
                 helper=None) -> ProbTranscript:
    """One run; ``forced`` may pin ``alice``, ``helper`` and ``ancilla``.

    ``two_qubit_op`` overrides the ``U``/``U1`` rule (used to test the
    alternative reading of a table row).
    """
    receiver = _receiver(receiver)
    channel_info, channel_state = _channel(a, b)
    frame = ROLE_FRAMES["omega"]
    receiver_role = "d" if receiver == Party.DIANA else "b"
    helper_role = role_of("omega", helper) if helper is not None else None
    secret = secret_state(lam)

    reg = Register()
    reg.add(["S"], secret)
    reg.add(["A", "B", "C", "D"], channel_state)
    alice, p1 = alice_step(reg, rng, forced)
    helpers, key, p2, bits = helper_step(reg, frame, receiver_role, helper_role, rng, forced)

    target = frame[receiver_role]
    op = two_qubit_op or two_qubit_op_for(receiver, key)
    gate = u_matrix(a, b) if op == "U" else u1_matrix(a, b)
    reg.add(["AUX"], qcore.EIGENSTATES["Z", 0])
    reg.apply(gate, [target, "AUX"])
    anc, p3 = reg.measure("AUX", rng=rng, outcome=None if forced is None else forced.get("ancilla"))

    correction = correction_for(receiver, alice, key)
    conditional = None
    if anc == 0:
        conditional = reg.pure_state(target)
        reg.apply(correction.matrix, [target])
    final = reg.pure_state(target)
    return ProbTranscript(
        channel=dict(channel_info),
        lam=complex(lam),
        receiver=str(receiver),
        alice_outcome=alice,
        helper_outcomes=helpers,
        correction=correction if anc == 0 else _P.I,
        final_state=final,
        fidelity=(qcore.fidelity_up_to_phase(final, secret) if final is not None
                  else reg.fidelity(target, secret)),
        classical_bits_consumed_by_receiver=bits,
        probability=p1 * p2 * p3,
        holdings=default_holdings(),
        ancilla_outcome=anc,
        two_qubit_op=op,
        succeeded=anc == 0,
        conditional_state=conditional,
    )


def run_phqis(receiver, a: float, b: float, lam: complex,
              rng: np.random.Generator, helper=None) -> ProbTranscript:
    return phqis_branch(receiver, a, b, lam, rng=rng, helper=helper)


def enumerate_phqis(receiver, a: float, b: float, lam: complex,
                    two_qubit_op: str | None = None) -> list[ProbTranscript]:
    """All reachable (Alice, helper, ancilla) branches with exact probabilities."""
    receiver = _receiver(receiver)
    helper_values = (0, 1) if receiver == Party.DIANA else BELL_ORDER
    out = []
    for alice in BELL_ORDER:
        for h in helper_values:
            for anc in (0, 1):
                try:
                    out.append(phqis_branch(
                        receiver, a, b, lam, two_qubit_op=two_qubit_op,
                        forced={"alice": alice, "helper": h, "ancilla": anc}))
                except ZeroProbabilityBranch:
                    continue
    return out


def success_probability_exact(receiver, a: float, b: float, lam: complex) -> float:
    """Total probability of ancilla 0, summed over the full branch tree."""
    return float(sum(t.probability for t in enumerate_phqis(receiver, a, b, lam)
                     if t.succeeded))
