"""Study region, point sets, quadrature grids and tile weights.

The region is a rectangular window split into square cells, with a boolean
mask marking which cells belong to the study area. Cells are half-open:
a point on a cell boundary belongs to the cell above/right of it, so every
point maps to exactly one cell.

Internally ``mask[i, j]`` covers x in ``[x_min + j*c, x_min + (j+1)*c)`` and
y in ``[y_min + i*c, y_min + (i+1)*c)`` with ``c = cell_size``; row index
increases with y (row 0 is the southernmost row).
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Region:
    """Rectangular window with a boolean inclusion mask.

    Parameters
    ----------
    x_min, y_min : float
        Coordinates of the lower-left corner of the bounding box.
    cell_size : float
        Side length of the square mask cells, > 0.
    mask : (n_rows, n_cols) bool array
        True marks cells inside the study area. Row 0 is the southernmost
        row (y increases with the row index).
    """

    x_min: float
    y_min: float
    cell_size: float
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", mask)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ValueError("mask must be a 2-D array with at least one cell")
        if not np.isfinite([self.x_min, self.y_min, self.cell_size]).all():
            raise ValueError("region coordinates must be finite")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        if not mask.any():
            raise ValueError("mask has no interior cells; region area would be 0")

    @property
    def n_rows(self):
        return self.mask.shape[0]

    @property
    def n_cols(self):
        return self.mask.shape[1]

    @property
    def width(self):
        return self.n_cols * self.cell_size

    @property
    def height(self):
        return self.n_rows * self.cell_size

    @property
    def x_max(self):
        return self.x_min + self.width

    @property
    def y_max(self):
        return self.y_min + self.height

    def cell_indices(self, points):
        """Map point coordinates to (row, col) cell indices.

        Points outside the bounding box get out-of-range indices; use
        :meth:`contains` to test membership.
        """
        coords = np.asarray(points.coords if isinstance(points, PointSet) else points, dtype=float)
        col = np.floor((coords[:, 0] - self.x_min) / self.cell_size).astype(np.int64)
        row = np.floor((coords[:, 1] - self.y_min) / self.cell_size).astype(np.int64)
        return row, col

    def contains(self, points):
        """Boolean array: True where the containing mask cell is inside."""
        row, col = self.cell_indices(points)
        ok = (row >= 0) & (row < self.n_rows) & (col >= 0) & (col < self.n_cols)
        inside = np.zeros(len(row), dtype=bool)
        inside[ok] = self.mask[row[ok], col[ok]]
        return inside


def region_area(region):
    """Total area of the region: (number of interior cells) * cell_size**2."""
    return float(np.count_nonzero(region.mask)) * region.cell_size**2


@dataclass(frozen=True)
class PointSet:
    """An ordered set of planar point locations."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if coords.size and not np.isfinite(coords).all():
            bad = np.nonzero(~np.isfinite(coords).all(axis=1))[0]
            raise ValueError(f"non-finite coordinates at rows {bad.tolist()}")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def x(self):
        return self.coords[:, 0]

    @property
    def y(self):
        return self.coords[:, 1]


def filter_to_region(points, region):
    """Split a point set into points inside and outside the region mask.

    Returns ``(inside, rejected_rows)`` where ``rejected_rows`` lists the
    0-based indices of points whose containing cell is outside the mask.
    Rejections are reported, never silent: callers decide whether dropped
    points are an error.
    """
    inside = region.contains(points)
    rejected = np.nonzero(~inside)[0].tolist()
    return PointSet(points.coords[inside]), rejected


def load_points_csv(path):
    """Read a point set from a CSV file with header ``x,y``."""
    coords = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["x", "y"]:
            raise ValueError(f"{path}: line 1: expected header 'x,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: line {lineno}: expected two fields, got {len(row)}")
            try:
                coords.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: could not parse coordinates {row!r}") from None
    return PointSet(np.asarray(coords, dtype=float).reshape(-1, 2))


def save_points_csv(points, path):
    """Write a point set as CSV with header ``x,y`` (repr round-trip floats)."""
    with open(path, "w", newline="") as fh:
        fh.write("x,y\n")
        for x, y in points.coords:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def generate_quadrature_grid(region, spacing):
    """Quadrature points on a square lattice of pitch ``spacing``.

    Lattice points are cell centers ``(x_min + spacing/2 + a*spacing,
    y_min + spacing/2 + b*spacing)``; only points whose containing mask cell
    is inside the region are kept. Halving the spacing multiplies the number
    of points by 4 on full-rectangle masks.
    """
    if not spacing > 0:
        raise ValueError("spacing must be > 0")
    if spacing > min(region.width, region.height):
        raise ValueError("spacing exceeds the region extent")
    nx = int(np.ceil(region.width / spacing)) + 1
    ny = int(np.ceil(region.height / spacing)) + 1
    ax = region.x_min + spacing / 2.0 + spacing * np.arange(nx)
    ay = region.y_min + spacing / 2.0 + spacing * np.arange(ny)
    xx, yy = np.meshgrid(ax, ay)  # y varies along rows, x fastest
    coords = np.column_stack([xx.ravel(), yy.ravel()])
    points = PointSet(coords)
    keep = region.contains(points)
    if not keep.any():
        raise ValueError(
            f"no lattice point of spacing {spacing} falls inside the region mask; "
            "spacing is too coarse"
        )
    return PointSet(coords[keep])


def compute_tile_weights(region, presences, quad, tile_size):
    """Quadrature weights from a square tiling of the region.

    The bounding box is partitioned into square tiles of side ``tile_size``
    anchored at ``(x_min, y_min)``. Each point's weight is the tile area
    divided by the number of points (presences and quadrature points
    together) in its tile, so the weights in one tile sum to the tile area.
    Tiles cut by the mask boundary keep their full nominal area; the
    resulting bias shrinks as the tiling is refined.

    Returns the weight vector for the concatenated presences-then-quadrature
    ordering.
    """
    if not tile_size > 0:
        raise ValueError("tile_size must be > 0")
    coords = np.concatenate([presences.coords, quad.coords], axis=0)
    outside = ~region.contains(coords)
    if outside.any():
        bad = np.nonzero(outside)[0].tolist()
        raise ValueError(f"points outside the region mask at rows {bad}")

    n_tx = int(np.ceil(region.width / tile_size))
    tx = np.floor((coords[:, 0] - region.x_min) / tile_size).astype(np.int64)
    ty = np.floor((coords[:, 1] - region.y_min) / tile_size).astype(np.int64)
    tile_id = ty * n_tx + tx

    uniq, inverse, counts = np.unique(tile_id, return_inverse=True, return_counts=True)
    weights = tile_size**2 / counts[inverse]

    n = presences.n
    quad_tiles = np.unique(tile_id[n:])
    orphaned = np.setdiff1d(np.unique(tile_id[:n]), quad_tiles)
    if orphaned.size:
        warnings.warn(
            f"{orphaned.size} tile(s) contain presences but no quadrature point; "
            "weights follow the same inverse-density rule",
            stacklevel=2,
        )
    return weights
