"""Collapsed variational coordinate ascent for selection and classification.

The selection probabilities omega are updated one coordinate at a time
within a sweep (each update sees the current sweep's earlier coordinates
and the previous sweep's later ones); once omega has converged, each new
point's class probability psi is computed independently from the prior
odds plus an omega-weighted sum of log path-probability ratios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError, InputError
from .polya_tree import (
    CellCounts,
    CentringGaussian,
    PolyaTreeSpec,
    TreeForest,
    alpha_for_layer,
    cell_indices,
    default_depth,
)
from .stats import expit

__all__ = [
    "Hyperparameters",
    "SelectionState",
    "ClassProbabilities",
    "FittedModel",
    "update_omega",
    "update_psi",
    "path_probability",
    "classify",
    "fit_model",
]

ETA_CLAMP = 700.0
_OPEN_LO = 1e-300
_OPEN_HI = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class Hyperparameters:
    a_y: float = 1.0
    b_y: float = 1.0
    u: float = 1.5

    def __post_init__(self):
        if not (self.a_y > 0.0 and self.b_y > 0.0):
            raise DomainError("a_y and b_y must be positive")
        if not self.u > 1.0:
            raise DomainError(f"the complexity exponent u must exceed 1, got {self.u!r}")


@dataclass
class SelectionState:
    omega: np.ndarray
    iteration: int
    converged: bool


@dataclass
class ClassProbabilities:
    psi: np.ndarray


def _open_unit(values):
    """Clip into the open interval (0, 1); expit(700.0) rounds to 1.0 in doubles."""
    return np.clip(values, _OPEN_LO, _OPEN_HI)


def update_omega(log_bf, hyper: Hyperparameters, tol: float = 1e-6,
                 max_iter: int = 1000, omega0=None) -> SelectionState:
    """Sweep the penalised-evidence update to convergence.

    Stops when the squared Euclidean distance between consecutive sweeps
    is at most `tol`; the converged flag records whether that happened
    within `max_iter` sweeps.
    """
    log_bf = np.asarray(log_bf, dtype=float)
    p = log_bf.size
    if p < 1:
        raise InputError("update_omega requires at least one variable")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    if omega0 is None:
        omega = np.full(p, 0.5)
    else:
        omega = np.asarray(omega0, dtype=float).copy()
        if omega.shape != (p,) or np.any(omega < 0.0) or np.any(omega > 1.0):
            raise InputError("omega0 must be a length-p vector in [0, 1]")
    base = float(p) ** hyper.u + p - 1.0
    bf = log_bf.tolist()
    om = omega.tolist()
    s = sum(om)
    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for j in range(p):
            s_minus = s - om[j]
            denom = base - s_minus
            if denom <= 0.0:
                raise ContractViolation("penalty denominator is non-positive")
            eta = bf[j] + math.log1p(s_minus) - math.log(denom)
            eta = max(-ETA_CLAMP, min(ETA_CLAMP, eta))
            w = expit(eta)
            w = min(max(w, _OPEN_LO), _OPEN_HI)
            d = w - om[j]
            delta += d * d
            s += d
            om[j] = w
        if delta <= tol:
            return SelectionState(np.array(om), sweep, True)
    return SelectionState(np.array(om), max_iter, False)


def path_probability(x: float, counts: CellCounts, group: int, spec: PolyaTreeSpec) -> float:
    """Probability that a point resembling x takes x's path in group `group`.

    Product over layers of (alpha + child count) / (2 alpha + parent
    count); equals 2**(-depth) when the tree holds no observations.
    """
    if group not in (0, 1):
        raise InputError("group must be 0 or 1")
    if not math.isfinite(x):
        raise InputError("path_probability requires finite x")
    idx = cell_indices(np.array([x]), spec.centring, spec.depth)[0]
    total = 0.0
    parent = counts.n1 if group == 1 else counts.n0
    for level in range(1, spec.depth + 1):
        c1, c0 = counts.count(format(int(idx[level - 1]), f"0{level}b"))
        child = c1 if group == 1 else c0
        a = alpha_for_layer(level, spec.c)
        total += math.log(a + child) - math.log(2.0 * a + parent)
        parent = child
    return math.exp(total)


def log_path_probability_matrix(forest: TreeForest, c, points) -> tuple[np.ndarray, np.ndarray]:
    """(m, p) log path probabilities for both groups, vectorized over a forest."""
    c = np.broadcast_to(np.asarray(c, dtype=float), (forest.p,))
    layer_keys = forest.new_point_keys(points)
    m = layer_keys[0].shape[0]
    lp1 = np.zeros((m, forest.p))
    lp0 = np.zeros((m, forest.p))
    parent1 = np.full((m, forest.p), float(forest.n1))
    parent0 = np.full((m, forest.p), float(forest.n0))
    for level in range(1, forest.depth + 1):
        a = np.ones(forest.p) if level == 1 else c * ((level - 1) ** 2)
        c1, c0 = forest.gather_counts(level, layer_keys[level - 1])
        lp1 += np.log(a + c1) - np.log(2.0 * a + parent1)
        lp0 += np.log(a + c0) - np.log(2.0 * a + parent0)
        parent1 = c1.astype(float)
        parent0 = c0.astype(float)
    return lp1, lp0


@dataclass
class FittedModel:
    """Converged selection state plus everything prediction needs.

    Trees and counts live in the same coordinate space as the training
    matrix the model was fitted on.  `standardization` maps incoming raw
    points into that space ((x - mean) / sd per variable, None for
    identity): prediction inputs must pass through `transform_new`.
    """

    hyper: Hyperparameters
    selection: SelectionState
    trees: list
    counts: list
    n1: int
    n0: int
    names: list
    standardization: tuple | None = None
    log_bf: np.ndarray | None = None
    _forest: TreeForest | None = field(default=None, repr=False)

    @property
    def omega(self) -> np.ndarray:
        return self.selection.omega

    @property
    def p(self) -> int:
        return len(self.trees)

    @property
    def c(self) -> np.ndarray:
        return np.array([t.c for t in self.trees])

    @property
    def depth(self) -> int:
        return self.trees[0].depth

    def transform_new(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.p:
            raise InputError(f"expected an (m, {self.p}) matrix, got shape {x.shape}")
        if self.standardization is None:
            return x
        means, sds = self.standardization
        return (x - means) / sds

    def forest(self) -> TreeForest:
        if self._forest is None:
            self._forest = _forest_from_counts(self.trees, self.counts, self.n1, self.n0)
        return self._forest

    def to_json_dict(self) -> dict:
        variables = []
        for name, tree, cc, w in zip(self.names, self.trees, self.counts, self.selection.omega):
            g = tree.centring
            if self.standardization is None:
                mean, sd = g.mean, g.sd
            else:
                # fold the raw -> model transform into one raw-unit Gaussian
                i = len(variables)
                mu, s = self.standardization[0][i], self.standardization[1][i]
                mean, sd = float(mu + s * g.mean), float(s * g.sd)
            variables.append({
                "name": name,
                "mean": mean,
                "sd": sd,
                "c": tree.c,
                "depth": tree.depth,
                "omega": float(w),
                "counts": {code: list(v) for code, v in sorted(cc.as_path_map().items())},
            })
        return {
            "hyperparameters": {"a_y": self.hyper.a_y, "b_y": self.hyper.b_y, "u": self.hyper.u},
            "n1": self.n1,
            "n0": self.n0,
            "variables": variables,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "FittedModel":
        hyper = Hyperparameters(**doc["hyperparameters"])
        trees, counts, names, omega = [], [], [], []
        for rec in doc["variables"]:
            names.append(rec["name"])
            omega.append(rec["omega"])
            trees.append(PolyaTreeSpec(CentringGaussian(rec["mean"], rec["sd"]), rec["c"], rec["depth"]))
            counts.append(CellCounts.from_path_map(
                {k: tuple(v) for k, v in rec["counts"].items()}, rec["depth"]))
        selection = SelectionState(np.array(omega), 0, True)
        return cls(hyper, selection, trees, counts, int(doc["n1"]), int(doc["n0"]), names)

    @classmethod
    def load(cls, path) -> "FittedModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def update_psi(model: FittedModel, newpoints) -> ClassProbabilities:
    """Class probabilities for already-standardized new points."""
    if not model.selection.converged:
        raise ContractViolation("update_psi requires a converged selection state")
    x = np.asarray(newpoints, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.p:
        raise InputError(f"expected an (m, {model.p}) matrix, got shape {x.shape}")
    lp1, lp0 = log_path_probability_matrix(model.forest(), model.c, x)
    prior = math.log(model.hyper.a_y + model.n1) - math.log(model.hyper.b_y + model.n0)
    eta = prior + (lp1 - lp0) @ model.selection.omega
    eta = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    return ClassProbabilities(_open_unit(expit(eta)))


def classify(psi: ClassProbabilities, threshold: float = 0.5) -> np.ndarray:
    """Hard labels from class probabilities; a tie at the threshold goes to group 1."""
    if not 0.0 < threshold < 1.0:
        raise InputError(f"threshold must lie in (0, 1), got {threshold!r}")
    values = psi.psi if isinstance(psi, ClassProbabilities) else np.asarray(psi, dtype=float)
    return (values >= threshold).astype(np.int8)


def fit_model(matrix, labels, c, hyper: Hyperparameters | None = None,
              depth: int | None = None, tol: float = 1e-6, max_iter: int = 1000,
              names=None, standardization=None) -> FittedModel:
    """Fit the full model: trees, evidence, and converged selection state.

    `c` is a scalar or per-variable vector of smoothing parameters;
    `standardization` records the raw -> matrix transform if the caller
    standardized the columns (stored for prediction, not applied here).
    """
    from .bnp_test import log_bayes_factors

    hyper = hyper or Hyperparameters()
    x = np.asarray(matrix, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2:
        raise InputError("matrix must be two-dimensional")
    n, p = x.shape
    depth = default_depth(n) if depth is None else depth
    forest = TreeForest.from_matrix(x, y, depth)
    c_vec = np.broadcast_to(np.asarray(c, dtype=float), (p,))
    log_bf = log_bayes_factors(forest, c_vec)
    selection = update_omega(log_bf, hyper, tol=tol, max_iter=max_iter)
    trees = [PolyaTreeSpec(forest.centrings[j], float(c_vec[j]), depth) for j in range(p)]
    counts = [forest.var_counts(j) for j in range(p)]
    if names is None:
        names = [f"V{j + 1}" for j in range(p)]
    return FittedModel(hyper, selection, trees, list(counts), forest.n1, forest.n0,
                       list(names), standardization, log_bf, forest)


def _forest_from_counts(trees, counts, n1, n0) -> TreeForest:
    """Rebuild the stacked forest arrays from per-variable counts."""
    depth = trees[0].depth
    p = len(trees)
    keys, k1, k0 = [], [], []
    for level in range(1, depth + 1):
        parts_k, parts_1, parts_0 = [], [], []
        for j, cc in enumerate(counts):
            parts_k.append(cc.cells[level - 1] + (j << level))
            parts_1.append(cc.count1[level - 1])
            parts_0.append(cc.count0[level - 1])
        keys.append(np.concatenate(parts_k) if parts_k else np.empty(0, dtype=np.int64))
        k1.append(np.concatenate(parts_1) if parts_1 else np.empty(0, dtype=np.int64))
        k0.append(np.concatenate(parts_0) if parts_0 else np.empty(0, dtype=np.int64))
    centrings = [t.centring for t in trees]
    return TreeForest(depth, n1, n0, p, centrings, keys, k1, k0)
