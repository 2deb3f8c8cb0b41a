"""Spearman rank correlation (matrix form, with p-values) and correlation-matrix PCA."""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import ConstantColumnWarning, DomainError, InsufficientDataError, UsageError
from .ingest import FeatureTable


def _ranks(x: np.ndarray) -> np.ndarray:
    return sps.rankdata(x, method="average")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    return float(np.sum(da * db) / math.sqrt(np.sum(da * da) * np.sum(db * db)))


def _exact_p(rx: np.ndarray, ry: np.ndarray, rho: float) -> float:
    """Two-sided permutation p-value over every reordering of ``ry``."""
    n = len(rx)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    r = (dy[perms] @ dx) / denom
    return float(np.mean(np.abs(r) >= abs(rho) - 1e-12))


def spearman(x, y, method: str = "t") -> tuple[float, float]:
    """Spearman's rho with a two-sided p-value.

    Pairs with a missing value on either side are dropped. Ties get average
    ranks. ``method="t"`` uses the Student-t approximation with n-2 degrees of
    freedom; ``method="exact"`` enumerates all permutations (n <= 10 only).
    A constant input yields ``(nan, nan)``.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise UsageError(f"length mismatch: {x.size} vs {y.size}")
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    n = x.size
    if n < 3:
        raise InsufficientDataError(f"spearman needs at least 3 complete pairs, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return math.nan, math.nan
    rx, ry = _ranks(x), _ranks(y)
    if np.array_equal(rx, ry):
        rho = 1.0
    elif np.array_equal(rx, n + 1 - ry):
        rho = -1.0
    else:
        rho = min(1.0, max(-1.0, _pearson(rx, ry)))
    if method == "exact":
        if n > 10:
            raise UsageError("exact permutation p-values are limited to n <= 10")
        return rho, _exact_p(rx, ry, rho)
    if method != "t":
        raise UsageError(f"unknown p-value method {method!r}")
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(2.0 * sps.t.sf(abs(t), n - 2))


# --------------------------------------------------------------------------
# Correlation matrix
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationReport:
    names: tuple[str, ...]
    rho: np.ndarray
    p: np.ndarray
    n: np.ndarray
    constant: tuple[bool, ...]
    target: str | None = None

    def target_ranking(self) -> list[tuple[str, float, float]]:
        """(name, rho, p) against the target, sorted by p ascending; undefined last."""
        if self.target is None:
            return []
        t = self.names.index(self.target)
        out = [(nm, float(self.rho[t, j]), float(self.p[t, j]))
               for j, nm in enumerate(self.names) if j != t]
        return sorted(out, key=lambda r: (math.isnan(r[2]), r[2] if not math.isnan(r[2]) else 0.0))

    def p_value(self, name: str) -> float:
        if self.target is None or name not in self.names:
            return math.nan
        return float(self.p[self.names.index(self.target), self.names.index(name)])

    @property
    def constant_columns(self) -> tuple[str, ...]:
        return tuple(nm for nm, c in zip(self.names, self.constant) if c)

    def to_csv(self, which: str = "rho") -> str:
        mat = {"rho": self.rho, "p": self.p, "n": self.n}[which]
        return _matrix_csv(self.names, self.names, mat)

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "rho": _nested(self.rho),
            "p": _nested(self.p),
            "n": self.n.astype(int).tolist(),
            "constant": list(self.constant_columns),
            "target": self.target,
            "target_ranking": [{"name": nm, "rho": _num(r), "p": _num(p)}
                               for nm, r, p in self.target_ranking()],
        }


def _num(x: float):
    return None if math.isnan(x) else float(f"{x:.6g}")


def _nested(a: np.ndarray) -> list:
    return [[_num(v) for v in row] for row in a]


def _matrix_csv(rows: Sequence[str], cols: Sequence[str], mat: np.ndarray, extra=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(cols))
    for name, row in zip(rows, mat):
        w.writerow([name] + ["NaN" if math.isnan(v) else f"{v:.6g}" for v in row])
    for name, row in extra:
        w.writerow([name] + [f"{v:.6g}" for v in row])
    return buf.getvalue()


def _table(table, names):
    if isinstance(table, FeatureTable):
        return np.asarray(table.values, dtype=float), tuple(table.columns)
    values = np.asarray(table, dtype=float)
    if names is None:
        raise UsageError("column names are required for a plain array")
    return values, tuple(names)


def correlation_matrix(table, target: str | None = None, names: Sequence[str] | None = None) -> CorrelationReport:
    """All-pairs Spearman rho and p over pairwise-complete rows.

    Constant columns get NaN throughout their row and column (diagonal too).
    """
    values, names = _table(table, names)
    k = values.shape[1]
    if k < 2:
        raise InsufficientDataError("correlation matrix needs at least 2 columns")
    if target is not None and target not in names:
        raise UsageError(f"target column {target!r} not in table")
    finite = np.isfinite(values)
    constant = []
    for j in range(k):
        col = values[finite[:, j], j]
        constant.append(bool(col.size == 0 or np.all(col == col[0])))
    rho = np.full((k, k), math.nan)
    p = np.full((k, k), math.nan)
    n = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ok = finite[:, i] & finite[:, j]
            n[i, j] = n[j, i] = ok.sum()
            if constant[i] or constant[j]:
                continue
            if i == j:
                rho[i, i], p[i, i] = 1.0, 0.0
                continue
            r, pv = spearman(values[ok, i], values[ok, j])
            rho[i, j] = rho[j, i] = r
            p[i, j] = p[j, i] = pv
    flagged = [nm for nm, c in zip(names, constant) if c]
    if flagged:
        warnings.warn(f"constant column(s) have undefined correlation: {', '.join(flagged)}",
                      ConstantColumnWarning, stacklevel=2)
    return CorrelationReport(names, rho, p, n, tuple(constant), target)


# --------------------------------------------------------------------------
# PCA
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaResult:
    names: tuple[str, ...]
    loadings: np.ndarray  # variables x components, unit-norm columns
    eigenvalues: np.ndarray
    contribution: np.ndarray
    cumulative: np.ndarray
    correlation: np.ndarray
    n: int

    @property
    def components(self) -> tuple[str, ...]:
        return tuple(f"F{k + 1}" for k in range(len(self.eigenvalues)))

    def to_csv(self) -> str:
        return _matrix_csv(self.names, self.components, self.loadings,
                           extra=[("Contribution Rate", self.contribution),
                                  ("Cumulative Contribution", self.cumulative)])

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "components": list(self.components),
            "loadings": _nested(self.loadings),
            "eigenvalues": [_num(v) for v in self.eigenvalues],
            "contribution": [_num(v) for v in self.contribution],
            "cumulative": [_num(v) for v in self.cumulative],
            "n": self.n,
        }


def pca(table, variables: Sequence[str] | None = None, names: Sequence[str] | None = None) -> PcaResult:
    """Principal components of the correlation matrix of ``variables``.

    Components are ordered by decreasing eigenvalue. Each component's sign is
    chosen so that its largest-magnitude loading is positive.
    """
    values, all_names = _table(table, names)
    variables = tuple(variables) if variables is not None else all_names
    missing = [v for v in variables if v not in all_names]
    if missing:
        raise UsageError(f"unknown variable(s): {', '.join(missing)}")
    k = len(variables)
    if k < 2:
        raise InsufficientDataError(f"PCA needs at least 2 variables, got {k}")
    X = values[:, [all_names.index(v) for v in variables]]
    X = X[np.all(np.isfinite(X), axis=1)]
    if X.shape[0] < k + 1:
        raise InsufficientDataError(f"PCA on {k} variables needs at least {k + 1} complete rows, got {X.shape[0]}")
    sd = X.std(axis=0)
    for name, s in zip(variables, sd):
        if s == 0:
            raise DomainError(f"variable {name!r} is constant; exclude it before PCA")
    Z = (X - X.mean(axis=0)) / sd
    R = (Z.T @ Z) / Z.shape[0]
    R = (R + R.T) / 2.0
    np.fill_diagonal(R, 1.0)

    w, V = np.linalg.eigh(R)
    lead = np.argmax(np.abs(V), axis=0)
    V = V * np.where(V[lead, np.arange(k)] < 0, -1.0, 1.0)
    order = sorted(range(k), key=lambda c: (-round(float(w[c]), 12), int(lead[c])))
    w, V = w[order], V[:, order]
    # a rank-deficient R can leave eigenvalues a hair below zero
    contribution = np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum()
    cumulative = np.cumsum(contribution)
    cumulative = np.maximum.accumulate(cumulative)
    return PcaResult(variables, V, w, contribution, cumulative, R, X.shape[0])


@dataclass(frozen=True)
class Factor:
    name: str
    loading: float
    p_value: float


def top_factors(report: CorrelationReport | None, result: PcaResult, k: int) -> list[Factor]:
    """Variables ranked by absolute loading on the first component.

    Equal loadings (always the case with two variables) are ordered by the
    smaller p-value against the report's target, then by column order.
    """
    if k <= 0:
        return []
    first = result.loadings[:, 0]
    pvals = [report.p_value(nm) if report is not None else math.nan for nm in result.names]

    def key(i):
        p = pvals[i]
        return (-abs(round(float(first[i]), 9)), p if not math.isnan(p) else math.inf, i)

    return [Factor(result.names[i], float(first[i]), pvals[i]) for i in sorted(range(len(first)), key=key)[:k]]
