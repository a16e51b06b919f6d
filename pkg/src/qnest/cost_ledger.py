"""Unit-cost accounting for sampler, function and charged quantum queries.

Counters ``gen_x``, ``gen_y``, ``phi`` and ``g`` hold *charged* elementary
queries: for classical estimators these are the calls actually made, for
quantum estimators they are the calls a quantum device would make (each
charged oracle query runs the sampler once).  ``quantum_charged`` is the part
of the cost incurred inside quantum mean estimation, and ``classical_charged``
counts the samples the classical surrogate really drew.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import reduce
from typing import Iterable

MAX_COUNT = 2**63 - 1

CSV_COLUMNS = ("gen_x", "gen_y", "phi", "g", "q_charged", "c_charged")


@dataclass(frozen=True)
class CostLedger:
    gen_x: int = 0
    gen_y: int = 0
    phi: int = 0
    g: int = 0
    quantum_charged: int = 0
    classical_charged: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int):
                object.__setattr__(self, f.name, int(v))
                v = int(v)
            if v < 0:
                raise ValueError(f"negative counter {f.name}={v}")
            if v > MAX_COUNT:
                raise OverflowError(f"counter {f.name} overflowed int64")

    @property
    def total_cost(self) -> int:
        """Charged elementary queries, gen_x + gen_y + phi + g."""
        return self.gen_x + self.gen_y + self.phi + self.g

    def __add__(self, other: "CostLedger") -> "CostLedger":
        if not isinstance(other, CostLedger):
            return NotImplemented
        return merge(self, other)

    def scale(self, n: int) -> "CostLedger":
        """Cost of ``n`` repetitions of whatever this ledger describes."""
        if n < 0:
            raise ValueError("scale factor must be nonnegative")
        return CostLedger(*(getattr(self, f.name) * int(n) for f in fields(self)))

    def as_row(self) -> dict[str, int]:
        return dict(zip(CSV_COLUMNS, self.as_tuple()))

    def as_tuple(self) -> tuple[int, ...]:
        return (self.gen_x, self.gen_y, self.phi, self.g,
                self.quantum_charged, self.classical_charged)

    @classmethod
    def from_row(cls, row) -> "CostLedger":
        return cls(*(int(row[c]) for c in CSV_COLUMNS))


ZERO = CostLedger()


def merge(a: CostLedger, b: CostLedger) -> CostLedger:
    """Componentwise sum; neither input is modified."""
    return CostLedger(*(getattr(a, f.name) + getattr(b, f.name) for f in fields(CostLedger)))


def merge_all(ledgers: Iterable[CostLedger]) -> CostLedger:
    return reduce(merge, ledgers, ZERO)
