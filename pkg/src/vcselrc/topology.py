"""Laser lattice construction: coupling weights and injection weight profile.

A reservoir node sits on every site of a rows x cols square lattice. Diffractive
coupling links each node to itself (self-feedback), its nearest neighbors
(lattice distance 1) and its second-nearest neighbors (diagonal, distance
sqrt(2)), with weights that decrease with distance. Optical injection reaches
every node with a weight that peaks at the array center and decays outward.

The numeric weight values are configuration, not device ground truth: the
defaults below (1.0 / 0.5 / 0.25 for the three distance classes, Gaussian
injection profile with sigma 1.5 lattice units) are representative engineering
choices. Absolute scales are set by the coupling/injection rates in the
dynamics module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# the three allowed coupling distance classes on a unit square lattice
DIST_SELF = 0.0
DIST_NEAREST = 1.0
DIST_DIAGONAL = math.sqrt(2.0)

_CLASS_TOL = 1e-9

DEFAULT_WEIGHT_PROFILE = {DIST_SELF: 1.0, DIST_NEAREST: 0.5, DIST_DIAGONAL: 0.25}
DEFAULT_INPUT_SIGMA = 1.5


@dataclass(frozen=True)
class LatticeTopology:
    """Immutable lattice description: masks, coupling matrix, input weights.

    Nodes are indexed row-major: node = row * cols + col. ``coupling`` is the
    symmetric J x J matrix of reservoir-internal weights, ``input_weights`` the
    length-J injection weight vector. Inactive nodes carry zero coupling rows,
    columns and input weight.
    """

    rows: int
    cols: int
    active: np.ndarray
    recorded: np.ndarray
    coupling: np.ndarray
    input_weights: np.ndarray

    @property
    def n_total(self) -> int:
        return self.rows * self.cols

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.active))

    @property
    def n_recorded(self) -> int:
        return int(np.count_nonzero(self.recorded))

    @property
    def recorded_indices(self) -> np.ndarray:
        return np.flatnonzero(self.recorded)

    @property
    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def node_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"node ({row},{col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def center_point(self) -> tuple[float, float]:
        """Continuous grid midpoint; coincides with the center node on odd grids."""
        return ((self.rows - 1) / 2.0, (self.cols - 1) / 2.0)


def lattice_distance(a: int, b: int, cols: int) -> float:
    """Euclidean distance between two nodes on the integer grid."""
    if cols < 1:
        raise ValueError("cols must be >= 1")
    if a < 0 or b < 0:
        raise IndexError("node indices must be non-negative")
    ra, ca = divmod(a, cols)
    rb, cb = divmod(b, cols)
    return math.hypot(ra - rb, ca - cb)


def _classify(distance: float) -> float | None:
    """Map a distance onto one of the coupling classes, or None if outside."""
    for ref in (DIST_SELF, DIST_NEAREST, DIST_DIAGONAL):
        if abs(distance - ref) < _CLASS_TOL:
            return ref
    return None


def _normalize_profile(weight_profile: dict) -> dict[float, float]:
    prof: dict[float, float] = {}
    for key, value in weight_profile.items():
        ref = _classify(float(key))
        if ref is None:
            raise ValueError(f"weight profile key {key!r} is not a lattice distance class")
        prof[ref] = float(value)
    missing = [d for d in (DIST_SELF, DIST_NEAREST, DIST_DIAGONAL) if d not in prof]
    if missing:
        raise ValueError(f"weight profile must cover distance classes 0, 1, sqrt(2); missing {missing}")
    if any(v < 0 for v in prof.values()):
        raise ValueError("coupling weights must be non-negative")
    if prof[DIST_SELF] < prof[DIST_NEAREST] or prof[DIST_NEAREST] < prof[DIST_DIAGONAL]:
        raise ValueError(
            "weight profile must be non-increasing with distance: "
            f"w(0)={prof[DIST_SELF]} w(1)={prof[DIST_NEAREST]} w(sqrt2)={prof[DIST_DIAGONAL]}"
        )
    if prof[DIST_DIAGONAL] <= 0:
        raise ValueError("second-nearest-neighbor weight must be positive")
    return prof


def _as_indices(nodes, rows: int, cols: int) -> list[int]:
    """Accept flat indices or (row, col) pairs; validate range."""
    out = []
    for node in nodes:
        if isinstance(node, tuple) or isinstance(node, list):
            r, c = node
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError(f"node ({r},{c}) outside {rows}x{cols} grid")
            out.append(int(r) * cols + int(c))
        else:
            idx = int(node)
            if not (0 <= idx < rows * cols):
                raise IndexError(f"node index {idx} outside {rows}x{cols} grid")
            out.append(idx)
    return out


def build_lattice(
    rows: int,
    cols: int,
    weight_profile: dict | None = None,
    input_sigma: float = DEFAULT_INPUT_SIGMA,
    inactive=(),
    unrecorded=(),
) -> LatticeTopology:
    """Construct the lattice topology.

    weight_profile maps the distance classes {0, 1, sqrt(2)} to relative
    coupling weights (must be non-increasing with distance). input_sigma is the
    decay length of the Gaussian injection profile, in lattice units, measured
    from the continuous grid center. ``inactive`` nodes are removed from the
    network (zero coupling and injection); ``unrecorded`` nodes participate in
    the dynamics but are excluded from the recorded output set.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if input_sigma <= 0:
        raise ValueError("input_sigma must be positive")
    prof = _normalize_profile(DEFAULT_WEIGHT_PROFILE if weight_profile is None else weight_profile)
    inactive_idx = set(_as_indices(inactive, rows, cols))
    unrecorded_idx = set(_as_indices(unrecorded, rows, cols))

    n = rows * cols
    active = np.ones(n, dtype=bool)
    for idx in inactive_idx:
        active[idx] = False
    recorded = active.copy()
    for idx in unrecorded_idx:
        recorded[idx] = False

    coupling = np.zeros((n, n))
    for j in range(n):
        if not active[j]:
            continue
        for l in range(j, n):
            if not active[l]:
                continue
            ref = _classify(lattice_distance(j, l, cols))
            if ref is None:
                continue
            coupling[j, l] = prof[ref]
            coupling[l, j] = prof[ref]

    cr, cc = (rows - 1) / 2.0, (cols - 1) / 2.0
    rr, cc_grid = np.divmod(np.arange(n), cols)
    d_center = np.hypot(rr - cr, cc_grid - cc)
    input_weights = np.exp(-(d_center**2) / (2.0 * input_sigma**2))
    input_weights[~active] = 0.0

    return LatticeTopology(
        rows=rows,
        cols=cols,
        active=active,
        recorded=recorded,
        coupling=coupling,
        input_weights=input_weights,
    )


def default_topology() -> LatticeTopology:
    """5x5 array with one corner switched off and the center node unrecorded.

    24 active nodes form the reservoir; the 23 recorded ones feed the readout
    (the center node cannot be recorded without cross-talk from the injection,
    so it contributes to the dynamics only).
    """
    return build_lattice(
        5,
        5,
        weight_profile=DEFAULT_WEIGHT_PROFILE,
        input_sigma=DEFAULT_INPUT_SIGMA,
        inactive=[(4, 4)],
        unrecorded=[(2, 2)],
    )
