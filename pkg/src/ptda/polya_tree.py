"""Dyadic quantile-partition trees centred on Gaussians.

One tree per variable: layer l splits the real line into 2**l half-open
cells (lower, upper] at the quantiles of the centring Gaussian, a point's
path through the tree is the binary expansion of its centring CDF value,
and the tree stores per-cell observation counts for the two response
groups.  Only occupied cells are stored, keyed by (layer, cell index), so
memory is O(n * depth) per variable.

Path codes are strings of '0'/'1' digits; '0' means branching left.  The
empty string is the root.  A point whose CDF value sits exactly on a cell
boundary belongs to the left cell, matching the (lower, upper] convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError, InputError
from .stats import normal_cdf, normal_pdf, normal_quantile

__all__ = [
    "SD_FLOOR",
    "CentringGaussian",
    "PolyaTreeSpec",
    "CellCounts",
    "TreeForest",
    "default_depth",
    "alpha",
    "alpha_for_layer",
    "cell_boundaries",
    "path_of",
    "cell_indices",
    "accumulate_counts",
    "predictive_density",
]

# replaces a zero sample standard deviation; keeps a constant column inert
# (every point takes the same path) instead of dividing by zero
SD_FLOOR = 1e-8


def default_depth(n: int) -> int:
    """Default truncation layer, floor(log2 n), never below 1."""
    if n < 1:
        raise DomainError("depth is defined for n >= 1")
    return max(1, int(math.floor(math.log2(n)))) if n > 1 else 1


@dataclass(frozen=True)
class CentringGaussian:
    """Gaussian whose quantiles define the partition; fitted from sample moments."""

    mean: float
    sd: float
    degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd) and self.sd > 0.0):
            raise DomainError(f"centring requires finite mean and sd > 0, got {self.mean!r}, {self.sd!r}")

    @classmethod
    def from_sample(cls, column) -> "CentringGaussian":
        x = np.asarray(column, dtype=float)
        if x.size < 1 or not np.all(np.isfinite(x)):
            raise InputError("centring sample must be non-empty and finite")
        m = float(x.mean())
        s = float(x.std(ddof=1)) if x.size > 1 else 0.0
        if s > 0.0 and math.isfinite(s):
            return cls(m, s)
        return cls(m, SD_FLOOR, degenerate=True)

    def cdf(self, x):
        return normal_cdf((x - self.mean) / self.sd)

    def quantile(self, q: float) -> float:
        return self.mean + self.sd * normal_quantile(q)

    def pdf(self, x):
        return normal_pdf((x - self.mean) / self.sd) / self.sd


@dataclass(frozen=True)
class PolyaTreeSpec:
    """Per-variable tree definition: centring, smoothing parameter, truncation depth."""

    centring: CentringGaussian
    c: float
    depth: int

    def __post_init__(self):
        if not (0.0 < self.c <= 100.0):
            raise DomainError(f"smoothing parameter must lie in (0, 100], got {self.c!r}")
        if self.depth < 1:
            raise DomainError(f"depth must be >= 1, got {self.depth!r}")


def alpha(code: str, c: float) -> float:
    """Beta parameter attached to the cell at `code` (children share it).

    Equals 1 for the two children of the root and c * l**2 when the parent
    code has length l >= 1.
    """
    if len(code) == 0:
        raise DomainError("the root carries no alpha parameter")
    if c <= 0.0:
        raise DomainError("alpha requires c > 0")
    return alpha_for_layer(len(code), c)


def alpha_for_layer(layer: int, c: float) -> float:
    """Alpha shared by all cells at `layer` (parent length is layer - 1)."""
    parent_len = layer - 1
    return 1.0 if parent_len == 0 else c * parent_len * parent_len


def cell_boundaries(code: str, g: CentringGaussian) -> tuple[float, float]:
    """Half-open interval (lower, upper] of the cell at `code`; root covers R."""
    level = len(code)
    if level == 0:
        return (-math.inf, math.inf)
    if any(ch not in "01" for ch in code):
        raise InputError(f"path code must be binary digits, got {code!r}")
    k = int(code, 2)
    scale = 1 << level
    lower = -math.inf if k == 0 else g.quantile(k / scale)
    upper = math.inf if k + 1 == scale else g.quantile((k + 1) / scale)
    return (lower, upper)


def cell_indices(column, centring: CentringGaussian, depth: int) -> np.ndarray:
    """(n, depth) array of cell indices, entry [i, l-1] locating point i at layer l.

    Computed as the exact binary expansion of the centring CDF value; a
    value on a dyadic boundary goes to the left cell.
    """
    u = np.atleast_1d(np.asarray(centring.cdf(np.asarray(column, dtype=float)), dtype=float))
    n = u.size
    out = np.empty((n, depth), dtype=np.int64)
    t = u.copy()
    k = np.zeros(n, dtype=np.int64)
    for level in range(depth):
        t *= 2.0
        d = t > 1.0
        t -= d  # exact: t in (1, 2] stays representable after subtracting 1
        k = 2 * k + d
        out[:, level] = k
    return out


def path_of(x: float, spec: PolyaTreeSpec) -> str:
    """Depth-D path code of a point."""
    if not math.isfinite(x):
        raise InputError(f"path_of requires a finite value, got {x!r}")
    k = int(cell_indices(np.array([x]), spec.centring, spec.depth)[0, -1])
    return format(k, f"0{spec.depth}b")


@dataclass
class CellCounts:
    """Sparse per-group counts over the dyadic cells of one variable's tree.

    `cells[l-1]` holds the sorted indices of the occupied (total count > 0)
    cells at layer l, with aligned group counts in `count1`/`count0`.
    Root counts are (n1, n0).
    """

    depth: int
    n1: int
    n0: int
    cells: list = field(default_factory=list)
    count1: list = field(default_factory=list)
    count0: list = field(default_factory=list)

    def count(self, code: str) -> tuple[int, int]:
        """(group-1, group-0) count of the cell at `code`; zeros if unoccupied."""
        level = len(code)
        if level == 0:
            return (self.n1, self.n0)
        if level > self.depth:
            raise DomainError(f"code {code!r} is below the truncation depth {self.depth}")
        k = int(code, 2)
        cells = self.cells[level - 1]
        i = int(np.searchsorted(cells, k))
        if i < cells.size and cells[i] == k:
            return (int(self.count1[level - 1][i]), int(self.count0[level - 1][i]))
        return (0, 0)

    def counts_at(self, level: int, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized `count` for an array of cell indices at one layer."""
        if level == 0:
            shape = np.shape(k)
            return (np.full(shape, self.n1, dtype=np.int64),
                    np.full(shape, self.n0, dtype=np.int64))
        cells = self.cells[level - 1]
        idx = np.searchsorted(cells, k)
        idx_c = np.minimum(idx, cells.size - 1) if cells.size else np.zeros_like(idx)
        hit = (cells[idx_c] == k) if cells.size else np.zeros(np.shape(k), dtype=bool)
        c1 = np.where(hit, self.count1[level - 1][idx_c] if cells.size else 0, 0)
        c0 = np.where(hit, self.count0[level - 1][idx_c] if cells.size else 0, 0)
        return c1.astype(np.int64), c0.astype(np.int64)

    def as_path_map(self) -> dict[str, tuple[int, int]]:
        """Occupied nodes as {path code: (n1, n0)}, root included."""
        out = {"": (self.n1, self.n0)}
        for level in range(1, self.depth + 1):
            for k, c1, c0 in zip(self.cells[level - 1], self.count1[level - 1], self.count0[level - 1]):
                out[format(int(k), f"0{level}b")] = (int(c1), int(c0))
        return out

    @classmethod
    def from_path_map(cls, mapping: dict, depth: int) -> "CellCounts":
        n1, n0 = (int(v) for v in mapping.get("", (0, 0)))
        by_level: dict[int, list] = {l: [] for l in range(1, depth + 1)}
        for code, (c1, c0) in mapping.items():
            if code == "":
                continue
            if len(code) > depth:
                raise InputError(f"code {code!r} exceeds depth {depth}")
            by_level[len(code)].append((int(code, 2), int(c1), int(c0)))
        cells, count1, count0 = [], [], []
        for level in range(1, depth + 1):
            rows = sorted(by_level[level])
            cells.append(np.array([r[0] for r in rows], dtype=np.int64))
            count1.append(np.array([r[1] for r in rows], dtype=np.int64))
            count0.append(np.array([r[2] for r in rows], dtype=np.int64))
        return cls(depth, n1, n0, cells, count1, count0)

    def check_conservation(self):
        """Raise ContractViolation unless every parent equals the sum of its children."""
        for level in range(self.depth):
            if level == 0:
                pk = np.array([0], dtype=np.int64)
                p1 = np.array([self.n1], dtype=np.int64)
                p0 = np.array([self.n0], dtype=np.int64)
            else:
                pk, p1, p0 = self.cells[level - 1], self.count1[level - 1], self.count0[level - 1]
            child1 = np.zeros_like(p1)
            child0 = np.zeros_like(p0)
            for bit in (0, 1):
                c1, c0 = self.counts_at(level + 1, 2 * pk + bit)
                child1 = child1 + c1
                child0 = child0 + c0
            if not (np.array_equal(child1, p1) and np.array_equal(child0, p0)):
                raise ContractViolation(f"count conservation fails between layers {level} and {level + 1}")
        if np.any(np.concatenate([np.array([self.n1, self.n0])] + [c for c in self.count1] + [c for c in self.count0]) < 0):
            raise ContractViolation("negative cell count")


def accumulate_counts(column, labels, spec: PolyaTreeSpec) -> CellCounts:
    """Bin one column into the tree, counting per group at every layer."""
    x = np.asarray(column, dtype=float)
    y = np.asarray(labels)
    if x.size < 1:
        raise InputError("accumulate_counts requires at least one observation")
    if x.shape != y.shape:
        raise InputError("column and labels must have equal length")
    if not np.all(np.isfinite(x)):
        raise InputError("accumulate_counts requires finite values")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("labels must be 0 or 1")
    y = y.astype(bool)
    idx = cell_indices(x, spec.centring, spec.depth)
    cells, count1, count0 = [], [], []
    for level in range(1, spec.depth + 1):
        k = idx[:, level - 1]
        occupied = np.unique(k)
        pos = np.searchsorted(occupied, k)
        c1 = np.bincount(pos[y], minlength=occupied.size)
        c0 = np.bincount(pos[~y], minlength=occupied.size)
        cells.append(occupied)
        count1.append(c1.astype(np.int64))
        count0.append(c0.astype(np.int64))
    return CellCounts(spec.depth, int(y.sum()), int((~y).sum()), cells, count1, count0)


def predictive_density(x: float, counts: CellCounts, spec: PolyaTreeSpec, group: int) -> float:
    """Posterior-mean density of one group's distribution at x.

    The centring density times, for each layer, twice the posterior-mean
    branch probability along x's path.  With no observations this is the
    centring density exactly.
    """
    if group not in (0, 1):
        raise InputError("group must be 0 or 1")
    if not math.isfinite(x):
        raise InputError("predictive_density requires finite x")
    idx = cell_indices(np.array([x]), spec.centring, spec.depth)[0]
    value = float(spec.centring.pdf(x))
    parent = counts.n1 if group == 1 else counts.n0
    for level in range(1, spec.depth + 1):
        c1, c0 = counts.count(format(int(idx[level - 1]), f"0{level}b"))
        child = c1 if group == 1 else c0
        a = alpha_for_layer(level, spec.c)
        value *= 2.0 * (a + child) / (2.0 * a + parent)
        parent = child
    return value


class TreeForest:
    """All p trees of a dataset in stacked sparse form.

    Occupied cells at layer l across every variable are stored in one
    sorted int64 key array, key = variable * 2**l + cell, so that child
    lookups (key -> 2 * key + bit) and count gathers vectorize across the
    whole matrix.  Counts are independent of the smoothing parameters, so
    one forest serves every candidate c.
    """

    def __init__(self, depth, n1, n0, p, centrings, keys, k1, k0):
        self.depth = depth
        self.n1 = n1
        self.n0 = n0
        self.p = p
        self.centrings = centrings
        self.keys = keys
        self.k1 = k1
        self.k0 = k0

    @classmethod
    def from_matrix(cls, matrix, labels, depth: int) -> "TreeForest":
        x = np.asarray(matrix, dtype=float)
        y = np.asarray(labels).astype(bool)
        if x.ndim != 2 or x.shape[0] != y.size:
            raise InputError("matrix must be (n, p) with one label per row")
        n, p = x.shape
        if n < 2 or not (y.any() and (~y).any()):
            raise InputError("fitting requires both groups non-empty")
        means = x.mean(axis=0)
        sds = x.std(axis=0, ddof=1)
        degenerate = ~(np.isfinite(sds) & (sds > 0.0))
        sds = np.where(degenerate, SD_FLOOR, sds)
        centrings = [
            CentringGaussian(float(m), float(s), bool(dg))
            for m, s, dg in zip(means, sds, degenerate)
        ]
        u = normal_cdf((x - means) / sds)
        keys, k1, k0 = _accumulate_layers(u, y, depth, p)
        return cls(depth, int(y.sum()), int((~y).sum()), p, centrings, keys, k1, k0)

    def var_counts(self, j: int) -> CellCounts:
        """Per-variable CellCounts view of variable j."""
        cells, count1, count0 = [], [], []
        for level in range(1, self.depth + 1):
            keys = self.keys[level - 1]
            lo = np.searchsorted(keys, j << level)
            hi = np.searchsorted(keys, (j + 1) << level)
            cells.append((keys[lo:hi] - (j << level)).astype(np.int64))
            count1.append(self.k1[level - 1][lo:hi].copy())
            count0.append(self.k0[level - 1][lo:hi].copy())
        return CellCounts(self.depth, self.n1, self.n0, cells, count1, count0)

    def new_point_keys(self, matrix) -> list[np.ndarray]:
        """Per-layer (m, p) key arrays locating new points' cells."""
        x = np.asarray(matrix, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.p:
            raise InputError(f"expected points with {self.p} variables, got shape {x.shape}")
        means = np.array([g.mean for g in self.centrings])
        sds = np.array([g.sd for g in self.centrings])
        u = normal_cdf((x - means) / sds)
        m = u.shape[0]
        var = np.arange(self.p, dtype=np.int64)
        t = u.copy()
        k = np.zeros((m, self.p), dtype=np.int64)
        out = []
        for level in range(1, self.depth + 1):
            t *= 2.0
            d = t > 1.0
            t -= d
            k = 2 * k + d
            out.append(k + (var << level))
        return out

    def gather_counts(self, level: int, query_keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Group counts of the cells named by `query_keys` at `level` (0 for absent)."""
        keys = self.keys[level - 1]
        idx = np.searchsorted(keys, query_keys)
        if keys.size:
            idx_c = np.minimum(idx, keys.size - 1)
            hit = keys[idx_c] == query_keys
            c1 = np.where(hit, self.k1[level - 1][idx_c], 0)
            c0 = np.where(hit, self.k0[level - 1][idx_c], 0)
        else:
            c1 = np.zeros_like(query_keys)
            c0 = np.zeros_like(query_keys)
        return c1, c0


def _accumulate_layers(u, y, depth, p):
    """Stacked sparse per-layer counts from the (n, p) CDF-value matrix."""
    var = np.arange(p, dtype=np.int64)
    t = u.copy()
    k = np.zeros(u.shape, dtype=np.int64)
    keys_out, k1_out, k0_out = [], [], []
    for level in range(1, depth + 1):
        t *= 2.0
        d = t > 1.0
        t -= d
        k = 2 * k + d
        keys = (k + (var << level)).ravel()
        occupied = np.unique(keys)
        pos = np.searchsorted(occupied, keys).reshape(u.shape)
        c1 = np.bincount(pos[y].ravel(), minlength=occupied.size)
        c0 = np.bincount(pos[~y].ravel(), minlength=occupied.size)
        keys_out.append(occupied)
        k1_out.append(c1.astype(np.int64))
        k0_out.append(c0.astype(np.int64))
    return keys_out, k1_out, k0_out
