"""
Gridded scalar fields: synthesis, ingestion from scattered samples and the
simulated measurement channel.

Cell (i, j) covers [ox + j*w, ox + (j+1)*w] x [oy + i*h, oy + (i+1)*h] and
its value sits at the cell centre.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.ndimage import map_coordinates

from src.config import get_settings
from src.kernel.errors import InvalidArgumentError
from src.kernel.gp_core import Dataset, Hyperparams, PosteriorCache, as_locations, sample_gp_prior


@dataclass(frozen=True)
class FieldGrid:
    origin: np.ndarray
    cell_size: np.ndarray
    values: np.ndarray
    measurement_noise_sd: float = 0.0

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(-1)
        cell = np.broadcast_to(np.asarray(self.cell_size, dtype=float), (2,)).copy()
        values = np.asarray(self.values, dtype=float)
        if origin.shape != (2,) or not np.all(np.isfinite(origin)):
            raise InvalidArgumentError("field origin must be a finite 2-D point")
        if np.any(cell <= 0.0) or not np.all(np.isfinite(cell)):
            raise InvalidArgumentError("cell sizes must be positive")
        if values.ndim != 2 or values.size == 0:
            raise InvalidArgumentError("field values must be a non-empty 2-D grid")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("field values must be finite")
        if not np.isfinite(self.measurement_noise_sd) or self.measurement_noise_sd < 0.0:
            raise InvalidArgumentError("measurement noise sd must be non-negative")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "cell_size", cell)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "measurement_noise_sd", float(self.measurement_noise_sd))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        extent = self.cell_size * np.array([self.cols, self.rows])
        return self.origin.copy(), self.origin + extent

    def cell_centers(self) -> np.ndarray:
        """Row-major (rows*cols, 2) array of cell-centre coordinates."""
        return grid_centers(self.origin, self.cell_size, self.rows, self.cols)

    def contains(self, x) -> np.ndarray:
        pts = as_locations(x, 2)
        lower, upper = self.bounds
        return np.all((pts >= lower) & (pts <= upper), axis=1)

    def interpolate(self, x) -> np.ndarray:
        """Noise-free bilinear values at every row of ``x``."""
        pts = as_locations(x, 2)
        if not np.all(self.contains(pts)):
            raise InvalidArgumentError("measurement location outside the field bounds")
        col = (pts[:, 0] - self.origin[0]) / self.cell_size[0] - 0.5
        row = (pts[:, 1] - self.origin[1]) / self.cell_size[1] - 0.5
        return map_coordinates(self.values, [row, col], order=1, mode="nearest")


def grid_centers(origin, cell_size, rows: int, cols: int) -> np.ndarray:
    origin = np.asarray(origin, dtype=float)
    cell = np.broadcast_to(np.asarray(cell_size, dtype=float), (2,))
    xs = origin[0] + (np.arange(cols) + 0.5) * cell[0]
    ys = origin[1] + (np.arange(rows) + 0.5) * cell[1]
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def synthesize_field(
    rows: int,
    cols: int,
    h: Hyperparams,
    seed: int,
    origin=(0.0, 0.0),
    cell_size=1.0,
) -> FieldGrid:
    """
    One GP prior realization at the cell centres.

    The latent field is drawn noise-free; h.noise_var becomes the grid's
    measurement noise.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgumentError("grid needs at least one row and one column")
    cap = get_settings().synth_cell_cap
    if rows * cols > cap:
        raise InvalidArgumentError(f"{rows}x{cols} grid exceeds the {cap}-cell synthesis cap")
    centers = grid_centers(origin, cell_size, rows, cols)
    values = sample_gp_prior(centers, h.noise_free(), seed).reshape(rows, cols)
    return FieldGrid(origin, cell_size, values, float(np.sqrt(h.noise_var)))


def field_from_samples(
    samples: Dataset,
    rows: int,
    cols: int,
    origin,
    cell_size,
    h: Hyperparams,
) -> FieldGrid:
    """Grid of full-GP posterior means given scattered measurements."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError("grid needs at least one row and one column")
    centers = grid_centers(origin, cell_size, rows, cols)
    means, _ = PosteriorCache.from_dataset(samples, h).query_batch(centers)
    return FieldGrid(origin, cell_size, means.reshape(rows, cols), float(np.sqrt(h.noise_var)))


def field_measure(field: FieldGrid, x, rng: np.random.Generator) -> float:
    """Bilinear value at ``x`` plus Gaussian measurement noise."""
    value = float(field.interpolate(x)[0])
    return value + field.measurement_noise_sd * float(rng.standard_normal())
