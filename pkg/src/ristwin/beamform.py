"""Array-theory beam steering and Tx -> surface -> Rx channel evaluation.

Feed model: a spherical wave from the Tx position (exact per-element
distance in phase and 1/d amplitude).  `tx_pos=None` selects the
plane-wave broadside limit (unit amplitude, equal phase).  Elements are
isotropic; contributions are summed in row-major element order so results
are bit-identical run to run.
"""

from __future__ import annotations

import numpy as np

from .cell import PinState, UnitCellModel
from .errors import DegenerateGeometryError, RisError
from .geometry import ArrayGeometry, Placement, check_config, direction_unit, element_positions

C0 = 299792458.0


def _feed_field(positions: np.ndarray, tx_pos, k: float) -> np.ndarray:
    """Incident field at each element: exp(-jk d)/d, or 1 for a plane wave."""
    if tx_pos is None:
        return np.ones(len(positions), dtype=complex)
    d = np.linalg.norm(positions - np.asarray(tx_pos, dtype=float), axis=1)
    if np.any(d == 0):
        raise DegenerateGeometryError("an element coincides with the Tx position")
    return np.exp(-1j * k * d) / d


def _wrap_deg(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def ideal_element_phase_deg(geom: ArrayGeometry, tx_pos, theta_deg: float,
                            phi_deg: float, f: float) -> np.ndarray:
    """Continuous reflectarray phase (rows x cols, degrees in [-180, 180)).

    The phase each element would need so the spherical feed wave is
    collimated toward (theta, phi): wrap((360 f / c) * (|tx - p| - p.u)).
    """
    p = element_positions(geom)
    u = direction_unit(theta_deg, phi_deg)
    if tx_pos is None:
        d_t = 0.0
    else:
        tx = np.asarray(tx_pos, dtype=float)
        if tx[2] <= 0:
            raise RisError("BAD_PLACEMENT", f"tx must have z > 0, got z={tx[2]}")
        d_t = np.linalg.norm(p - tx, axis=1)
    phase = (360.0 * f / C0) * (d_t - p @ u)
    return _wrap_deg(phase).reshape(geom.rows, geom.cols)


def quantize_codebook(ideal_deg: np.ndarray, model: UnitCellModel, f: float) -> np.ndarray:
    """1-bit quantization of an ideal phase matrix.

    Per element, pick the PIN state whose complex reflection has the larger
    projection onto the ideal phasor, i.e. maximize
    |Gamma_b| * cos(arg Gamma_b - ideal).  Ties break to OFF (bit 0).
    """
    ideal = np.radians(np.asarray(ideal_deg, dtype=float))
    g_off = complex(model.reflection(PinState.OFF, f))
    g_on = complex(model.reflection(PinState.ON, f))
    score_off = abs(g_off) * np.cos(np.angle(g_off) - ideal)
    score_on = abs(g_on) * np.cos(np.angle(g_on) - ideal)
    return (score_on > score_off).astype(np.uint8)


def _element_gammas(bits: np.ndarray, model: UnitCellModel, f: float) -> np.ndarray:
    g_off = complex(model.reflection(PinState.OFF, f))
    g_on = complex(model.reflection(PinState.ON, f))
    return np.where(bits.ravel() == 1, g_on, g_off)


def channel_gain(geom: ArrayGeometry, bits: np.ndarray, model: UnitCellModel,
                 placement: Placement, f: float) -> complex:
    """Cascade gain H(f) = sum exp(-jk d_t)/d_t * Gamma * exp(-jk d_r)/d_r.

    No direct Tx -> Rx term: the modeled measurement observes reflections
    from the surface only.
    """
    bits = check_config(bits, geom)
    p = element_positions(geom)
    k = 2.0 * np.pi * f / C0
    d_t = np.linalg.norm(p - np.asarray(placement.tx_pos, dtype=float), axis=1)
    d_r = np.linalg.norm(p - np.asarray(placement.rx_pos, dtype=float), axis=1)
    if np.any(d_t == 0) or np.any(d_r == 0):
        raise DegenerateGeometryError("an element coincides with the Tx or Rx position")
    gam = _element_gammas(bits, model, f)
    terms = np.exp(-1j * k * (d_t + d_r)) / (d_t * d_r) * gam
    return complex(np.sum(terms))


def received_power_db(gain: complex, ref_gain, offset_db: float = 0.0) -> float:
    """20*log10(|gain| / |ref|) + offset_db.

    `offset_db` is a calibration constant: absolute receiver-relative (dBFS)
    levels are reproduced only up to this offset.
    """
    ref = abs(ref_gain)
    if ref == 0:
        raise RisError("ZERO_REFERENCE", "reference gain must be nonzero")
    return 20.0 * np.log10(abs(gain) / ref) + offset_db


def radiation_pattern(geom: ArrayGeometry, bits: np.ndarray, model: UnitCellModel,
                      tx_pos, f: float, theta_grid, phi_deg: float = 0.0) -> list:
    """Normalized far-field cut: list of (theta_deg, power_db), peak at 0 dB.

    Negative grid angles are folded into the phi + 180 half-plane, so a
    grid spanning [-90, 90] covers the full cut through the surface normal.
    """
    theta_grid = list(theta_grid)
    if not theta_grid:
        raise RisError("BAD_GRID", "theta grid must be non-empty")
    bits = check_config(bits, geom)
    p = element_positions(geom)
    k = 2.0 * np.pi * f / C0
    feed = _feed_field(p, tx_pos, k)
    gam = _element_gammas(bits, model, f)
    excitation = feed * gam
    u = np.array([direction_unit(t, phi_deg) for t in theta_grid])
    field = (np.exp(+1j * k * (u @ p.T)) * excitation).sum(axis=1)
    power_db = 20.0 * np.log10(np.maximum(np.abs(field), 1e-300))
    power_db -= power_db.max()
    return list(zip([float(t) for t in theta_grid], [float(v) for v in power_db]))


def frequency_sweep(geom: ArrayGeometry, bits_config: np.ndarray, bits_base: np.ndarray,
                    model: UnitCellModel, placement: Placement, f_grid,
                    ref_gain=1.0, offset_db: float = 0.0) -> list:
    """Per-frequency received power of two configs against a shared reference.

    Returns rows (f_hz, gain_db_config, gain_db_base).
    """
    rows = []
    for f in f_grid:
        h_cfg = channel_gain(geom, bits_config, model, placement, float(f))
        h_base = channel_gain(geom, bits_base, model, placement, float(f))
        rows.append((
            float(f),
            received_power_db(h_cfg, ref_gain, offset_db),
            received_power_db(h_base, ref_gain, offset_db),
        ))
    return rows


def pattern_peak_deg(pattern: list) -> float:
    """Grid angle of the pattern maximum."""
    return max(pattern, key=lambda row: row[1])[0]
