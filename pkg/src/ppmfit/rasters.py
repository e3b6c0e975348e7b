"""ESRI ASCII grid rasters and covariate sampling.

Grids are stored internally with row 0 as the southernmost row so that a
point's cell is ``floor((y - y_ll) / cell_size)``; the ASCII format puts the
northernmost row first, so readers and writers flip the row order.
"""

from dataclasses import dataclass, field

import numpy as np

from .region import PointSet, Region

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


@dataclass(frozen=True)
class RasterGrid:
    """One gridded surface: six-field header plus a value matrix.

    ``values[i, j]`` is the cell with x in column j and y in row i counted
    from the south; cells equal to ``nodata`` carry no value.
    """

    x_ll: float
    y_ll: float
    cell_size: float
    nodata: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        object.__setattr__(self, "values", values)
        valid = values[values != self.nodata]
        if valid.size and not np.isfinite(valid).all():
            raise ValueError("raster contains non-finite values outside nodata cells")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def valid_mask(self):
        return self.values != self.nodata

    def header_matches(self, other):
        return (
            self.n_cols == other.n_cols
            and self.n_rows == other.n_rows
            and self.x_ll == other.x_ll
            and self.y_ll == other.y_ll
            and self.cell_size == other.cell_size
        )

    def to_region(self):
        """Region whose mask marks the non-nodata cells of this grid."""
        return Region(self.x_ll, self.y_ll, self.cell_size, self.valid_mask)


def read_ascii_grid(path):
    """Parse an ESRI ASCII grid.

    Expects six header lines (``ncols``, ``nrows``, ``xllcorner``,
    ``yllcorner``, ``cellsize``, ``NODATA_value``; keys case-insensitive, any
    order) followed by nrows*ncols whitespace-separated values, first row
    northernmost.
    """
    header = {}
    with open(path, "r") as fh:
        lines = fh.read().split("\n")
    for lineno in range(6):
        if lineno >= len(lines):
            raise ValueError(f"{path}: line {lineno + 1}: missing header line")
        parts = lines[lineno].split()
        if len(parts) != 2:
            raise ValueError(f"{path}: line {lineno + 1}: expected 'key value', got {lines[lineno]!r}")
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            raise ValueError(f"{path}: line {lineno + 1}: unknown header key {parts[0]!r}")
        if key in header:
            raise ValueError(f"{path}: line {lineno + 1}: duplicate header key {parts[0]!r}")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise ValueError(f"{path}: line {lineno + 1}: bad numeric value {parts[1]!r}") from None
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ValueError(f"{path}: header is missing {missing}")

    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if n_cols < 1 or n_rows < 1 or n_cols != header["ncols"] or n_rows != header["nrows"]:
        raise ValueError(f"{path}: ncols/nrows must be positive integers")

    tokens = []
    for lineno, line in enumerate(lines[6:], start=7):
        for tok in line.split():
            try:
                tokens.append(float(tok))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad numeric value {tok!r}") from None
    if len(tokens) != n_rows * n_cols:
        raise ValueError(
            f"{path}: expected {n_rows * n_cols} grid values, found {len(tokens)}"
        )
    values = np.asarray(tokens, dtype=float).reshape(n_rows, n_cols)
    return RasterGrid(
        x_ll=header["xllcorner"],
        y_ll=header["yllcorner"],
        cell_size=header["cellsize"],
        nodata=header["nodata_value"],
        values=np.flipud(values),
    )


def write_ascii_grid(grid, path):
    """Write a raster as an ESRI ASCII grid (northernmost row first)."""
    with open(path, "w") as fh:
        fh.write(f"ncols {grid.n_cols}\n")
        fh.write(f"nrows {grid.n_rows}\n")
        fh.write(f"xllcorner {float(grid.x_ll)!r}\n")
        fh.write(f"yllcorner {float(grid.y_ll)!r}\n")
        fh.write(f"cellsize {float(grid.cell_size)!r}\n")
        fh.write(f"NODATA_value {float(grid.nodata)!r}\n")
        for row in np.flipud(grid.values):
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


@dataclass(frozen=True)
class CovariateStack:
    """Named covariate grids sharing one header."""

    names: tuple
    grids: tuple

    def __post_init__(self):
        names = tuple(self.names)
        grids = tuple(self.grids)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "grids", grids)
        if len(names) != len(grids) or len(names) < 1:
            raise ValueError("stack needs at least one named grid")
        if len(set(names)) != len(names):
            raise ValueError("covariate names must be unique")
        first = grids[0]
        for name, grid in zip(names[1:], grids[1:]):
            if not first.header_matches(grid):
                raise ValueError(f"grid {name!r} is not aligned with {names[0]!r}")

    @property
    def k(self):
        return len(self.names)

    @property
    def grid0(self):
        return self.grids[0]

    def subset(self, names):
        lookup = dict(zip(self.names, self.grids))
        missing = [n for n in names if n not in lookup]
        if missing:
            raise ValueError(f"unknown covariate name(s) {missing}")
        return CovariateStack(tuple(names), tuple(lookup[n] for n in names))

    def cell_matrix(self):
        """(n_rows*n_cols, k) matrix of cell values, C row order, south-up."""
        return np.column_stack([g.values.ravel() for g in self.grids])


def load_stack(named_paths):
    """Read aligned ASCII grids into a stack; ``named_paths`` is name->path."""
    names = tuple(named_paths)
    grids = tuple(read_ascii_grid(named_paths[n]) for n in names)
    return CovariateStack(names, grids)


def sample_covariates(stack, points):
    """Nearest-cell covariate values at each point: an (n, k) matrix.

    A point in a nodata cell (or outside the raster extent) is an error,
    since it signals mask/covariate misalignment; the message lists the
    offending point rows.
    """
    coords = points.coords if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    g0 = stack.grid0
    col = np.floor((coords[:, 0] - g0.x_ll) / g0.cell_size).astype(np.int64)
    row = np.floor((coords[:, 1] - g0.y_ll) / g0.cell_size).astype(np.int64)
    inside = (row >= 0) & (row < g0.n_rows) & (col >= 0) & (col < g0.n_cols)
    if not inside.all():
        bad = np.nonzero(~inside)[0].tolist()
        raise ValueError(f"points outside the raster extent at rows {bad}")
    out = np.empty((coords.shape[0], stack.k), dtype=float)
    for j, grid in enumerate(stack.grids):
        out[:, j] = grid.values[row, col]
        hit_nodata = out[:, j] == grid.nodata
        if hit_nodata.any():
            bad = np.nonzero(hit_nodata)[0].tolist()
            raise ValueError(
                f"covariate {stack.names[j]!r} has nodata at sampled cells for point rows {bad}"
            )
    return out
