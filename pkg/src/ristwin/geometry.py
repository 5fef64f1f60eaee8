"""Element lattice of a block-tiled reflecting surface.

A surface is a `tile_rows x tile_cols` tiling of identical blocks, each
`block_rows x block_cols` elements on a square pitch.  The surface lies in
the z = 0 plane with normal +z; element (0, 0) is the top-left corner
(+y, -x quadrant) and indices run row-major.  Phase configurations are
plain uint8 bit matrices of shape (rows, cols), bit 1 = PIN ON.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class ArrayGeometry:
    block_rows: int = 8
    block_cols: int = 8
    tile_rows: int = 1
    tile_cols: int = 1
    pitch_m: float = 0.041

    def __post_init__(self):
        for name in ("block_rows", "block_cols", "tile_rows", "tile_cols"):
            if getattr(self, name) < 1:
                raise GeometryError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.pitch_m <= 0:
            raise GeometryError(f"pitch_m must be > 0, got {self.pitch_m}")

    @property
    def rows(self) -> int:
        return self.block_rows * self.tile_rows

    @property
    def cols(self) -> int:
        return self.block_cols * self.tile_cols

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def n_blocks(self) -> int:
        return self.tile_rows * self.tile_cols


def element_positions(geom: ArrayGeometry) -> np.ndarray:
    """Row-major (N, 3) element centers; the centroid is the origin."""
    r = np.arange(geom.rows, dtype=float)
    c = np.arange(geom.cols, dtype=float)
    x = (c - (geom.cols - 1) / 2.0) * geom.pitch_m
    y = ((geom.rows - 1) / 2.0 - r) * geom.pitch_m
    xx, yy = np.meshgrid(x, y)
    return np.column_stack([xx.ravel(), yy.ravel(), np.zeros(geom.n_elements)])


def direction_unit(theta_deg: float, phi_deg: float) -> np.ndarray:
    """Unit vector for polar angle theta from +z and azimuth phi from +x.

    A negative theta is folded to (abs(theta), phi + 180): the same ray
    expressed on the other side of the phi cut.
    """
    if theta_deg < 0:
        theta_deg, phi_deg = -theta_deg, phi_deg + 180.0
    th, ph = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


@dataclass(frozen=True)
class Placement:
    """Tx and Rx positions in meters; both must face the surface (z > 0)."""

    tx_pos: tuple
    rx_pos: tuple

    def __post_init__(self):
        for name, pos in (("tx_pos", self.tx_pos), ("rx_pos", self.rx_pos)):
            if len(pos) != 3:
                raise GeometryError(f"{name} must be a 3-vector, got {pos}")
            if pos[2] <= 0:
                raise GeometryError(f"{name} must have z > 0 (in front of the surface), got z={pos[2]}")


def all_off(geom: ArrayGeometry) -> np.ndarray:
    """All-PIN-OFF configuration (the unbiased hardware default)."""
    return np.zeros((geom.rows, geom.cols), dtype=np.uint8)


def check_config(bits: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape != (geom.rows, geom.cols):
        raise GeometryError(
            f"config shape {bits.shape} does not match geometry {geom.rows}x{geom.cols}",
            expected=[geom.rows, geom.cols], got=list(bits.shape),
        )
    if not np.isin(bits, (0, 1)).all():
        raise GeometryError("config must contain only bits 0/1")
    return bits.astype(np.uint8)
