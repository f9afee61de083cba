"""Labelled multi-block quantum register.

A :class:`Register` holds named qubits grouped into mutually unentangled
blocks, each block a :class:`~hqcomm.qcore.Ket`.  Blocks merge (tensor) when an
operation spans them and split again after a measurement collapses a qubit
or a pair, so block sizes stay at desk scale even for multi-copy sessions.

Every measurement accepts either an ``rng`` (Born sampling) or a forced
``outcome`` (deterministic projection, used for branch enumeration); both
return the probability of the realized outcome.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

import numpy as np

from . import qcore
from .errors import StateError
from .qcore import BellOutcome, Ket


_ADJOINT = {"Z": None, "X": qcore.H}


class Register:
    def __init__(self) -> None:
        self._blocks: dict[int, tuple[tuple[str, ...], Ket]] = {}
        self._where: dict[str, int] = {}
        self._ids = itertools.count()

    def __contains__(self, label: str) -> bool:
        return label in self._where

    @property
    def labels(self) -> list[str]:
        return list(self._where)

    def copy(self) -> "Register":
        new = Register()
        new._blocks = dict(self._blocks)
        new._where = dict(self._where)
        new._ids = itertools.count(max(self._blocks, default=-1) + 1)
        return new

    def add(self, labels: Sequence[str], ket: Ket) -> None:
        labels = tuple(labels)
        if len(labels) != ket.num_qubits:
            raise StateError(f"{len(labels)} labels for a {ket.num_qubits}-qubit state")
        clash = [lab for lab in labels if lab in self._where]
        if clash or len(set(labels)) != len(labels):
            raise StateError(f"labels already in use: {clash or labels}")
        bid = next(self._ids)
        self._blocks[bid] = (labels, ket)
        for lab in labels:
            self._where[lab] = bid

    def block_of(self, label: str) -> tuple[str, ...]:
        return self._blocks[self._bid(label)][0]

    def snapshot(self) -> tuple:
        """Hashable, order-independent view of the full quantum content."""
        return tuple(
            sorted((labels, ket.amps.tobytes()) for labels, ket in self._blocks.values())
        )

    def _bid(self, label: str) -> int:
        try:
            return self._where[label]
        except KeyError:
            raise StateError(f"unknown qubit label {label!r}") from None

    def _set(self, bid: int, labels: tuple[str, ...], ket: Ket) -> None:
        self._blocks[bid] = (labels, ket)
        for lab in labels:
            self._where[lab] = bid

    def _merge(self, labels: Iterable[str]) -> int:
        bids = list(dict.fromkeys([self._bid(lab) for lab in labels]))
        if len(bids) == 1:
            return bids[0]
        merged_labels, merged = self._blocks[bids[0]]
        for bid in bids[1:]:
            labs, ket = self._blocks.pop(bid)
            merged = qcore.tensor(merged, ket)
            merged_labels = merged_labels + labs
        self._set(bids[0], merged_labels, merged)
        return bids[0]

    def _split(self, bid: int, qubits: tuple[str, ...], factor: Ket) -> None:
        labels, ket = self._blocks[bid]
        if len(qubits) == len(labels):
            return
        idx = [labels.index(q) for q in qubits]
        rest = qcore.factor_out(ket, idx, factor)
        self._set(bid, tuple(lab for lab in labels if lab not in qubits), rest)
        new = next(self._ids)
        self._set(new, qubits, factor)

    def ket(self, labels: Sequence[str]) -> Ket:
        """Joint state of ``labels``; they must be exactly a union of blocks."""
        labels = tuple(labels)
        bid = self._merge(labels)
        block_labels, ket = self._blocks[bid]
        if set(block_labels) != set(labels):
            raise StateError(f"{labels} is entangled with {set(block_labels) - set(labels)}")
        return qcore.permute_qubits(ket, [block_labels.index(lab) for lab in labels])

    def pure_state(self, label: str) -> Ket | None:
        """The qubit's own state if it is unentangled, else ``None``.

        An unentangled qubit sharing a block is split out into its own block.
        """
        bid = self._bid(label)
        labels, ket = self._blocks[bid]
        if len(labels) == 1:
            return ket
        q = labels.index(label)
        m = qcore._front(ket, (q,))
        (r00, r01), (r10, r11) = (m @ m.conj().T).tolist()
        # det = product of the two eigenvalues; ~0 means a pure marginal
        if abs(r00 * r11 - r01 * r10) > 1e-14:
            return None
        # rank one: v = rho row / sqrt(rho_kk) is the qubit's state up to phase
        k = 0 if r00.real >= r11.real else 1
        scale = 1 / math.sqrt((r00 if k == 0 else r11).real)
        amps = np.array([r00 if k == 0 else r10, r01 if k == 0 else r11]).conj() * scale
        factor = Ket(amps, 1)
        amps.flags.writeable = False
        rest = factor.amps.conj() @ m
        rest.flags.writeable = False
        self._set(bid, labels[:q] + labels[q + 1:], Ket(rest, len(labels) - 1))
        self._set(next(self._ids), (label,), factor)
        return factor

    def density(self, label: str) -> np.ndarray:
        labels, ket = self._blocks[self._bid(label)]
        return qcore.reduced_density_1q(ket, labels.index(label))

    def apply(self, gate, labels: Sequence[str]) -> None:
        bid = self._merge(labels)
        block_labels, ket = self._blocks[bid]
        ket = qcore.apply_unitary(ket, gate, [block_labels.index(lab) for lab in labels])
        self._set(bid, block_labels, ket)

    def measure(
        self,
        label: str,
        rng: np.random.Generator | None = None,
        basis: str = "Z",
        outcome: int | None = None,
    ) -> tuple[int, float]:
        """Measure one qubit in the Z or X basis; bit 0 means |0> or |+>."""
        if basis not in ("Z", "X"):
            raise StateError(f"unknown basis {basis!r}")
        bid = self._bid(label)
        outcome, p = self._collapse(
            bid, (label,), _ADJOINT[basis], None if outcome is None else int(outcome), rng
        )
        self._finish(bid, (label,), qcore.EIGENSTATES[basis, outcome])
        return outcome, p

    def bell_measure(
        self,
        first: str,
        second: str,
        rng: np.random.Generator | None = None,
        outcome: BellOutcome | None = None,
    ) -> tuple[BellOutcome, float]:
        bid = self._merge((first, second))
        k = None if outcome is None else qcore.BELL_ORDER.index(BellOutcome(outcome))
        k, p = self._collapse(bid, (first, second), qcore._BELL_ADJ, k, rng)
        outcome = qcore.BELL_ORDER[k]
        self._finish(bid, (first, second), qcore.bell_state(outcome))
        return outcome, p

    def _collapse(self, bid, qubits, adjoint, outcome, rng):
        labels, ket = self._blocks[bid]
        idx = [labels.index(q) for q in qubits]
        outcome, p, rest = qcore.collapse(ket, idx, adjoint, outcome, rng)
        if rest is not None:
            self._set(bid, tuple(lab for lab in labels if lab not in qubits), rest)
        else:
            del self._blocks[bid]
        return outcome, p

    def _finish(self, bid, qubits, state: Ket) -> None:
        # the collapsed qubits become their own block
        self._set(next(self._ids), qubits, state)

    def fidelity(self, label: str, target: Ket) -> float:
        """Fidelity of one qubit with a pure target (mixed-state aware)."""
        pure = self.pure_state(label)
        if pure is not None:
            return qcore.fidelity_up_to_phase(pure, target)
        return qcore.mixed_fidelity(self.density(label), target)
