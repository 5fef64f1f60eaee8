"""Greedy per-element power maximization plus a brute-force oracle.

The search flips one PIN bit at a time and keeps the flip only when the
measured power improves by more than `epsilon_db`, sweeping the elements
for a fixed number of passes or until a full pass accepts nothing.  The
measurement callback is probed strictly sequentially, mirroring a physical
receiver that observes one configuration at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import RisError
from .geometry import ArrayGeometry

Measure = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class TraceEntry:
    iteration: int      # probe index, 0 = baseline
    power_db: float
    accepted: bool


@dataclass
class PowerTrace:
    entries: list = field(default_factory=list)

    def append(self, entry: TraceEntry):
        self.entries.append(entry)

    def accepted_powers(self) -> list:
        return [e.power_db for e in self.entries if e.accepted]

    def improvement_db(self) -> float:
        """Last accepted power minus the first (baseline) probe."""
        if not self.entries:
            raise RisError("EMPTY_TRACE", "trace has no entries")
        return self.accepted_powers()[-1] - self.entries[0].power_db

    def to_rows(self) -> list:
        return [(e.iteration, e.power_db, e.accepted) for e in self.entries]


def improvement_db(trace: PowerTrace) -> float:
    return trace.improvement_db()


@dataclass(frozen=True)
class OptimizerSettings:
    """passes >= 0; epsilon_db >= 0 is the minimum accepted improvement;
    element order is 'row-major' or 'random' (seeded, re-drawn per pass)."""

    passes: int = 3
    epsilon_db: float = 0.0
    element_order: str = "row-major"
    seed: int = 0

    def __post_init__(self):
        if self.passes < 0:
            raise RisError("BAD_SETTINGS", f"passes must be >= 0, got {self.passes}")
        if self.epsilon_db < 0:
            raise RisError("BAD_SETTINGS", f"epsilon_db must be >= 0, got {self.epsilon_db}")
        if self.element_order not in ("row-major", "random"):
            raise RisError("BAD_SETTINGS", f"unknown element order {self.element_order!r}")


class ProbeError(RisError):
    """Measurement callback failure, tagged with the failing probe index."""

    def __init__(self, probe_index: int, cause: Exception):
        super().__init__("PROBE_FAILED", f"measurement failed at probe {probe_index}: {cause}",
                         probe_index=probe_index)
        self.probe_index = probe_index


def _probe(measure: Measure, bits: np.ndarray, index: int) -> float:
    try:
        return float(measure(bits))
    except Exception as exc:
        raise ProbeError(index, exc) from exc


def greedy_optimize(measure: Measure, init: np.ndarray, settings: OptimizerSettings,
                    on_entry: Optional[Callable[[TraceEntry], None]] = None):
    """Run the single-flip greedy search.

    Returns (final config, PowerTrace) with one trace entry per probe,
    baseline included.  Accepted powers are non-decreasing by construction;
    when the run ends because a full pass accepted no flip, the result is
    1-flip-local-optimal at the epsilon_db threshold.
    """
    bits = np.array(init, dtype=np.uint8, copy=True)
    rows, cols = bits.shape
    n = rows * cols
    trace = PowerTrace()
    rng = np.random.default_rng(settings.seed)

    def record(entry):
        trace.append(entry)
        if on_entry is not None:
            on_entry(entry)

    probe_idx = 0
    best = _probe(measure, bits, probe_idx)
    record(TraceEntry(probe_idx, best, True))

    for _ in range(settings.passes):
        if settings.element_order == "random":
            order = rng.permutation(n)
        else:
            order = np.arange(n)
        accepted_any = False
        for flat in order:
            r, c = divmod(int(flat), cols)
            bits[r, c] ^= 1
            probe_idx += 1
            power = _probe(measure, bits, probe_idx)
            if power > best + settings.epsilon_db:
                best = power
                accepted_any = True
                record(TraceEntry(probe_idx, power, True))
            else:
                bits[r, c] ^= 1
                record(TraceEntry(probe_idx, power, False))
        if not accepted_any:
            break
    return bits, trace


def brute_force_best(measure: Measure, geom: ArrayGeometry):
    """Exhaustive argmax over all 2^N configs (N <= 20).

    Configs are enumerated in lexicographic row-major bit-string order and
    ties keep the earliest, i.e. the lexicographically smallest maximizer.
    Returns (config, power_db).
    """
    n = geom.n_elements
    if n > 20:
        raise RisError("BUDGET", f"brute force limited to 20 elements, geometry has {n}")
    best_bits, best_power = None, -np.inf
    for code in range(2 ** n):
        bits = np.array([(code >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)
        bits = bits.reshape(geom.rows, geom.cols)
        power = float(measure(bits))
        if power > best_power:
            best_bits, best_power = bits, power
    return best_bits, best_power
