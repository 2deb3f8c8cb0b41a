"""Weighted TOPSIS scoring and its use as a per-point momentum measure."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegeneracyWarning, DomainError, EmptySeriesError, UsageError
from .ingest import MatchDataset

BENEFIT = "benefit"
COST = "cost"

DEFAULT_WEIGHTS = (0.4, 0.25, 0.2, 0.15)
MOMENTUM_CRITERIA = ("sets_won", "games_won", "points_won", "serving")


@dataclass(frozen=True)
class DecisionMatrix:
    values: np.ndarray
    criteria: tuple[str, ...] = ()
    directions: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DomainError(f"decision matrix must be n x m with n, m >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("decision matrix contains non-finite entries")
        v.setflags(write=False)
        m = v.shape[1]
        criteria = tuple(self.criteria) or tuple(f"A{j + 1}" for j in range(m))
        directions = tuple(self.directions) or (BENEFIT,) * m
        if len(criteria) != m or len(directions) != m:
            raise UsageError("criteria and directions must have one entry per column")
        bad = set(directions) - {BENEFIT, COST}
        if bad:
            raise UsageError(f"unknown criterion direction(s): {sorted(bad)}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "criteria", criteria)
        object.__setattr__(self, "directions", directions)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class WeightVector:
    values: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.values)
        if not w:
            raise UsageError("weight vector is empty")
        if any(not np.isfinite(x) or x < 0 for x in w):
            raise UsageError(f"weights must be finite and nonnegative: {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise UsageError(f"weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "values", w)

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class TopsisResult:
    normalized: np.ndarray
    weighted: np.ndarray
    ideal: np.ndarray
    anti_ideal: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    closeness: np.ndarray
    order: np.ndarray  # row indices, best first
    ranks: np.ndarray  # 1-based rank per row
    degenerate_rows: tuple[int, ...] = ()
    warnings: tuple[str, ...] = field(default=())


def _as_matrix(X) -> DecisionMatrix:
    return X if isinstance(X, DecisionMatrix) else DecisionMatrix(np.asarray(X, dtype=float))


def normalize(X) -> np.ndarray:
    """Divide each column by its Euclidean norm; all-zero columns stay zero."""
    v = _as_matrix(X).values
    norms = np.sqrt(np.sum(v * v, axis=0))
    out = np.zeros_like(v)
    nz = norms > 0
    out[:, nz] = v[:, nz] / norms[nz]
    return out


def ideal_vectors(V, directions: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Best and worst value per column: max/min for benefit, min/max for cost."""
    V = np.asarray(V, dtype=float)
    directions = tuple(directions) if directions else (BENEFIT,) * V.shape[1]
    hi, lo = V.max(axis=0), V.min(axis=0)
    cost = np.array([d == COST for d in directions])
    return np.where(cost, lo, hi), np.where(cost, hi, lo)


def distances(V, ideal, anti_ideal) -> tuple[np.ndarray, np.ndarray]:
    V = np.asarray(V, dtype=float)
    d_plus = np.sqrt(np.sum((V - np.asarray(ideal)) ** 2, axis=1))
    d_minus = np.sqrt(np.sum((V - np.asarray(anti_ideal)) ** 2, axis=1))
    return d_plus, d_minus


def closeness(d_plus, d_minus) -> np.ndarray:
    """D- / (D+ + D-). Rows with both distances zero get 0.5 and a warning."""
    d_plus = np.asarray(d_plus, dtype=float)
    d_minus = np.asarray(d_minus, dtype=float)
    total = d_plus + d_minus
    degenerate = total == 0
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} alternative(s) coincide with both ideal points; closeness set to 0.5",
            DegeneracyWarning,
            stacklevel=2,
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(degenerate, 0.5, d_minus / np.where(degenerate, 1.0, total))
    return np.clip(c, 0.0, 1.0)


def evaluate(X, W, weighted: bool = True) -> TopsisResult:
    """Full TOPSIS pass: normalize, weight, ideal points, distances, closeness, rank.

    ``weighted=False`` skips the weighting step and measures distances on the
    normalized matrix directly.
    """
    dm = _as_matrix(X)
    w = W if isinstance(W, WeightVector) else WeightVector(tuple(W))
    if len(w) != dm.shape[1]:
        raise UsageError(f"{len(w)} weights for {dm.shape[1]} criteria")
    norm = normalize(dm)
    V = norm * w.as_array() if weighted else norm
    a_star, a_minus = ideal_vectors(V, dm.directions)
    d_plus, d_minus = distances(V, a_star, a_minus)
    degenerate = tuple(int(i) for i in np.flatnonzero(d_plus + d_minus == 0))
    c = closeness(d_plus, d_minus)
    notes: tuple[str, ...] = ()
    if degenerate:
        notes = (f"TOPSIS degeneracy: {len(degenerate)} of {dm.shape[0]} alternative(s) "
                 f"equal both ideal points; closeness set to 0.5",)
    order = np.argsort(-c, kind="stable")
    ranks = np.empty_like(order)
    ranks[order] = np.arange(1, len(order) + 1)
    return TopsisResult(norm, V, a_star, a_minus, d_plus, d_minus, c, order, ranks, degenerate, notes)


# --------------------------------------------------------------------------
# Momentum series
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentumSeries:
    """Closeness per point for both players of one match.

    ``closeness`` has shape (n_points, 2); column 0 is player 1.
    """

    match_id: str
    players: tuple[str, str]
    elapsed: np.ndarray
    set_no: np.ndarray
    game_no: np.ndarray
    point_no: np.ndarray
    closeness: np.ndarray
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.elapsed)

    def for_player(self, player: int) -> np.ndarray:
        return self.closeness[:, player - 1]

    def slice_set(self, set_no: int) -> MomentumSeries:
        keep = self.set_no == set_no
        return MomentumSeries(
            self.match_id, self.players, self.elapsed[keep], self.set_no[keep],
            self.game_no[keep], self.point_no[keep], self.closeness[keep], self.warnings,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["elapsed_seconds", "set_no", "game_no", "point_no", "player", "closeness"])
        for i in range(len(self)):
            for p in (1, 2):
                w.writerow([int(self.elapsed[i]), int(self.set_no[i]), int(self.game_no[i]),
                            int(self.point_no[i]), p, repr(float(self.closeness[i, p - 1]))])
        return buf.getvalue()


def momentum_matrix(dataset: MatchDataset) -> DecisionMatrix:
    """Rows alternate player 1 / player 2 for each point; all criteria are benefits."""
    rows = []
    for r in dataset:
        rows.append((r.p1_sets, r.p1_games, r.p1_points_won, 1.0 if r.server == 1 else 0.0))
        rows.append((r.p2_sets, r.p2_games, r.p2_points_won, 1.0 if r.server == 2 else 0.0))
    return DecisionMatrix(np.array(rows, dtype=float), MOMENTUM_CRITERIA)


def momentum_series(dataset: MatchDataset, W=DEFAULT_WEIGHTS, weighted: bool = True) -> MomentumSeries:
    """TOPSIS closeness of every (point, player) pair, normalized over the whole match."""
    if len(dataset) == 0:
        raise EmptySeriesError("match has no points")
    ids = dataset.match_ids
    if len(ids) != 1:
        raise UsageError(f"momentum series needs exactly one match, got {len(ids)}")
    res = evaluate(momentum_matrix(dataset), W, weighted=weighted)
    c = res.closeness.reshape(-1, 2)
    recs = dataset.records
    return MomentumSeries(
        ids[0],
        dataset.players(),
        np.array([r.elapsed_time for r in recs]),
        np.array([r.set_no for r in recs]),
        np.array([r.game_no for r in recs]),
        np.array([r.point_no for r in recs]),
        c,
        res.warnings,
    )
