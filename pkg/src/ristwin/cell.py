"""Two-state (PIN ON/OFF) reflection response of one unit reflecting element.

The model is phenomenological: each state's complex reflection coefficient
versus frequency is given by a table of anchors (frequency, magnitude in dB,
phase in degrees) and evaluated by piecewise-linear interpolation in
(dB, unwrapped-degree) space.  The packaged default table is tuned so that
inside 3.7-3.8 GHz both states stay above -3 dB and the ON-OFF unwrapped
phase difference stays inside 180 +/- 20 degrees, with the response
degrading toward the lower end of the n78 band.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import FrequencyRangeError, RisError


class PinState(Enum):
    """PIN diode bias state: OFF = 0 V, ON = forward bias."""

    OFF = 0
    ON = 1


@dataclass(frozen=True)
class ReflectionAnchor:
    """One sampled point of a state's reflection curve."""

    freq_hz: float
    mag_db: float        # <= 0 (passive element)
    phase_deg: float     # in [-180, 180)

    def __post_init__(self):
        if self.mag_db > 0:
            raise RisError("BAD_ANCHOR", f"anchor magnitude {self.mag_db} dB > 0 (active)")
        if not -180.0 <= self.phase_deg < 180.0:
            raise RisError("BAD_ANCHOR", f"anchor phase {self.phase_deg} not in [-180, 180)")


@dataclass(frozen=True)
class BandReport:
    """Result of a band validation sweep."""

    min_magnitude_db_per_state: dict
    phase_diff_range_deg: tuple
    pass_: bool

    def to_json(self) -> dict:
        return {
            "min_magnitude_db_per_state": {k.name: v for k, v in self.min_magnitude_db_per_state.items()},
            "phase_diff_range_deg": list(self.phase_diff_range_deg),
            "pass": self.pass_,
        }


def _unwrap_deg(phases: np.ndarray) -> np.ndarray:
    """Unwrap a phase sequence in degrees so consecutive steps are < 180."""
    return np.degrees(np.unwrap(np.radians(phases)))


@dataclass(frozen=True)
class UnitCellModel:
    """Anchor tables for both PIN states plus band metadata.

    Anchor phases are unwrapped once at construction; evaluation is then
    piecewise-linear in (dB, unwrapped degrees).  Instances are immutable
    and safe for concurrent evaluation.
    """

    anchors_off: tuple
    anchors_on: tuple
    design_band: tuple = (3.7e9, 3.8e9)
    center_frequency: float = 3.75e9
    _tables: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        tables = {}
        for state, anchors in ((PinState.OFF, self.anchors_off), (PinState.ON, self.anchors_on)):
            if len(anchors) < 2:
                raise RisError("BAD_MODEL", f"state {state.name} needs >= 2 anchors")
            f = np.array([a.freq_hz for a in anchors], dtype=float)
            if np.any(np.diff(f) <= 0):
                raise RisError("BAD_MODEL", f"state {state.name} anchors not strictly increasing in frequency")
            mag = np.array([a.mag_db for a in anchors], dtype=float)
            ph = _unwrap_deg(np.array([a.phase_deg for a in anchors], dtype=float))
            tables[state] = (f, mag, ph)
        lo, hi = self.design_band
        for state, (f, _, _) in tables.items():
            if f[0] > lo or f[-1] < hi:
                raise RisError(
                    "BAD_MODEL",
                    f"state {state.name} anchors span [{f[0]:g}, {f[-1]:g}] Hz, "
                    f"short of design band [{lo:g}, {hi:g}] Hz",
                )
        object.__setattr__(self, "_tables", tables)

    def span(self, state: PinState) -> tuple:
        f = self._tables[state][0]
        return (float(f[0]), float(f[-1]))

    def _check_span(self, state: PinState, f):
        lo, hi = self.span(state)
        f = np.asarray(f, dtype=float)
        if np.any(f < lo) or np.any(f > hi):
            bad = float(np.atleast_1d(f)[(np.atleast_1d(f) < lo) | (np.atleast_1d(f) > hi)][0])
            raise FrequencyRangeError(
                f"frequency {bad:g} Hz outside anchor span [{lo:g}, {hi:g}] Hz for state {state.name}",
                freq_hz=bad, span_hz=[lo, hi], state=state.name,
            )

    def magnitude_db(self, state: PinState, f):
        self._check_span(state, f)
        grid, mag, _ = self._tables[state]
        return np.interp(f, grid, mag)

    def phase_unwrapped_deg(self, state: PinState, f):
        self._check_span(state, f)
        grid, _, ph = self._tables[state]
        return np.interp(f, grid, ph)

    def reflection(self, state: PinState, f):
        """Complex reflection coefficient M * exp(j*Phi) at frequency f (Hz).

        Accepts a scalar or array of frequencies inside the state's span.
        """
        mag = 10.0 ** (self.magnitude_db(state, f) / 20.0)
        ph = np.radians(self.phase_unwrapped_deg(state, f))
        return mag * np.exp(1j * ph)

    def phase_difference_deg(self, f):
        """Unwrapped ON-minus-OFF phase difference, reduced to (-360, 360)."""
        d = self.phase_unwrapped_deg(PinState.ON, f) - self.phase_unwrapped_deg(PinState.OFF, f)
        r = np.mod(np.asarray(d, dtype=float), 720.0)
        r = np.where(r >= 360.0, r - 720.0, r)
        return r if np.ndim(d) else float(r)

    def validate_band(self, band, mag_floor_db: float, phase_center_deg: float,
                      phase_tol_deg: float, n_grid: int) -> BandReport:
        """Check both states on a uniform grid over `band`.

        Pass iff the worst magnitude of each state is >= `mag_floor_db` and
        |phase difference| stays within `phase_center_deg +/- phase_tol_deg`
        at every grid frequency.
        """
        if n_grid < 2:
            raise RisError("BAD_GRID", f"n_grid must be >= 2, got {n_grid}")
        lo, hi = band
        if lo >= hi:
            raise RisError("BAD_BAND", f"band [{lo:g}, {hi:g}] is empty")
        grid = np.linspace(lo, hi, n_grid)
        mins = {s: float(np.min(self.magnitude_db(s, grid))) for s in PinState}
        diff = np.abs(np.asarray(self.phase_difference_deg(grid)))
        d_range = (float(diff.min()), float(diff.max()))
        ok = (
            min(mins.values()) >= mag_floor_db
            and d_range[0] >= phase_center_deg - phase_tol_deg
            and d_range[1] <= phase_center_deg + phase_tol_deg
        )
        return BandReport(mins, d_range, ok)


def _parse_anchor(obj: dict) -> ReflectionAnchor:
    try:
        return ReflectionAnchor(float(obj["freq_hz"]), float(obj["mag_db"]), float(obj["phase_deg"]))
    except KeyError as exc:
        raise RisError("BAD_MODEL", f"anchor missing field {exc}") from exc


def model_from_json(doc: dict) -> UnitCellModel:
    """Build a model from the anchor-table JSON document.

    Layout: {"states": [{"state": "OFF"|"ON", "anchors": [...]}, ...]},
    optionally with center_frequency_hz / design_band_hz overrides.  A
    stackup_info block, if present, is ignored (informational only).
    """
    states: dict[str, Sequence[ReflectionAnchor]] = {}
    for block in doc.get("states", []):
        states[block["state"]] = tuple(_parse_anchor(a) for a in block["anchors"])
    if set(states) != {"OFF", "ON"}:
        raise RisError("BAD_MODEL", f"model file must define exactly states OFF and ON, got {sorted(states)}")
    kwargs = {}
    if "design_band_hz" in doc:
        kwargs["design_band"] = tuple(float(x) for x in doc["design_band_hz"])
    if "center_frequency_hz" in doc:
        kwargs["center_frequency"] = float(doc["center_frequency_hz"])
    return UnitCellModel(anchors_off=states["OFF"], anchors_on=states["ON"], **kwargs)


def load_model(path) -> UnitCellModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def default_model() -> UnitCellModel:
    """The packaged default anchor table (replaceable with measured curves)."""
    text = resources.files("ristwin").joinpath("data/default_cell_model.json").read_text()
    return model_from_json(json.loads(text))
