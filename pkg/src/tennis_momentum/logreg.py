"""Binary logistic regression fitted by batch gradient descent, with Wald
inference tables and cutoff-based confusion matrices.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import linprog

from .errors import (
    DegenerateLabelsError,
    DomainError,
    FeatureMismatchError,
    SeparationWarning,
    UsageError,
)
from .ingest import FeatureTable

log = logging.getLogger(__name__)

INTERCEPT = "constant"
_EPS = 1e-15


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.1
    max_iter: int = 10_000
    tol: float = 1e-8
    cutoff: float = 0.5
    # |theta| on the standardized scale beyond which the fit is flagged as separated
    separation_threshold: float = 15.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise UsageError(f"alpha must be > 0, got {self.alpha}")
        if int(self.max_iter) < 1:
            raise UsageError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise UsageError(f"tol must be > 0, got {self.tol}")
        if not 0 < self.cutoff < 1:
            raise UsageError(f"cutoff must lie in (0, 1), got {self.cutoff}")


@dataclass(frozen=True)
class LogisticModel:
    """Fitted coefficients on the reporting (original) scale.

    ``coef[0]`` is the intercept; ``names[0]`` is ``"constant"``.
    ``theta_std`` holds the same model on the standardized scale used for
    descent: ``z = (x - mean) / scale``.
    """

    coef: np.ndarray
    names: tuple[str, ...]
    theta_std: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    iterations: int
    final_loss: float
    converged: bool
    separated: bool
    loss_history: tuple[float, ...] = ()
    dropped: tuple[str, ...] = ()
    separating_direction: np.ndarray | None = None
    notes: tuple[str, ...] = ()

    @property
    def features(self) -> tuple[str, ...]:
        return self.names[1:]


# --------------------------------------------------------------------------
# Core maths
# --------------------------------------------------------------------------

def sigmoid(z):
    """Logistic function, overflow-free for any finite input."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def _design(features) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _check_xy(theta, features, labels):
    X = _design(features)
    y = np.asarray(labels, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    if X.shape[0] == 0:
        raise DomainError("loss of an empty sample set is undefined")
    if y.shape[0] != X.shape[0]:
        raise UsageError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if theta.shape[0] != X.shape[1]:
        raise UsageError(f"theta has {theta.shape[0]} entries, expected {X.shape[1]} (intercept first)")
    return theta, X, y


def _loss(theta, X, y) -> float:
    h = np.clip(sigmoid(X @ theta), _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(h) + (1.0 - y) * np.log(1.0 - h)))


def _gradient(theta, X, y) -> np.ndarray:
    return X.T @ (sigmoid(X @ theta) - y) / X.shape[0]


def loss(theta, features, labels) -> float:
    """Mean log-loss. ``theta[0]`` is the intercept; ``features`` excludes it."""
    return _loss(*_check_xy(theta, features, labels))


def gradient(theta, features, labels) -> np.ndarray:
    return _gradient(*_check_xy(theta, features, labels))


# --------------------------------------------------------------------------
# Fitting
# --------------------------------------------------------------------------

def _unpack(features, names):
    if isinstance(features, FeatureTable):
        return np.asarray(features.values, dtype=float), tuple(features.columns)
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return X, tuple(names)


def find_separation(Z: np.ndarray, y: np.ndarray, tol: float = 1e-6) -> np.ndarray | None:
    """Direction d (intercept first) with (2y-1) * (z . d) >= 0 on every row and
    strict on at least one, or None. Such a d exists exactly when the
    maximum-likelihood estimate is infinite (complete or quasi-complete separation).
    """
    A = _design(Z) * (2.0 * y - 1.0)[:, None]
    res = linprog(
        -A.sum(axis=0),
        A_ub=-A,
        b_ub=np.zeros(A.shape[0]),
        bounds=[(-1.0, 1.0)] * A.shape[1],
        method="highs",
    )
    if res.status != 0 or -res.fun <= tol * max(1.0, A.shape[0] ** 0.5):
        return None
    d = np.where(np.abs(res.x) > 1e-9, res.x, 0.0)
    return d if np.any(d) else None


def fit(features, labels, config: TrainConfig = TrainConfig(), names: Sequence[str] | None = None) -> LogisticModel:
    """Fit by gradient descent on standardized features, starting from zero.

    Features that are constant over the sample are dropped (and reported in
    ``dropped``). The learning rate is halved whenever a step would increase
    the loss, so accepted iterates never go uphill.
    """
    X, names = _unpack(features, names)
    y = np.asarray(labels, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise UsageError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise DegenerateLabelsError("need at least 2 rows to fit")
    if not np.all(np.isfinite(X)):
        raise DomainError("features contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise UsageError("labels must be 0 or 1")
    if y.min() == y.max():
        raise DegenerateLabelsError(f"all labels are {int(y[0])}; both classes are required")

    spread = np.ptp(X, axis=0) if X.shape[1] else np.zeros(0)
    keep = spread > 0
    dropped = tuple(n for n, k in zip(names, keep) if not k)
    notes = []
    if dropped:
        msg = f"dropped constant feature(s): {', '.join(dropped)}"
        log.info(msg)
        notes.append(msg)
    X = X[:, keep]
    names = tuple(n for n, k in zip(names, keep) if k)

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    Z = (X - mean) / scale

    Z1 = _design(Z)
    theta = np.zeros(Z1.shape[1])
    J = _loss(theta, Z1, y)
    history = [J]
    alpha = config.alpha
    converged = False
    it = 0
    for it in range(1, int(config.max_iter) + 1):
        g = _gradient(theta, Z1, y)
        while True:
            cand = theta - alpha * g
            J_new = _loss(cand, Z1, y)
            if J_new <= J or alpha < 1e-15:
                break
            alpha *= 0.5
        if J_new > J:
            # no descent possible at machine precision
            converged = True
            break
        delta = J - J_new
        theta, J = cand, J_new
        history.append(J)
        if abs(delta) < config.tol:
            converged = True
            break

    coef = _to_reporting(theta, mean, scale)
    direction = find_separation(Z, y)
    separated = direction is not None or bool(np.max(np.abs(theta)) > config.separation_threshold)
    rep_dir = None
    if direction is not None:
        rep_dir = _to_reporting(direction, mean, scale)
    if separated:
        msg = "quasi-complete separation: the likelihood has no finite maximum; coefficients are not identified"
        warnings.warn(msg, SeparationWarning, stacklevel=2)
        notes.append(msg)
    if not converged:
        notes.append(f"gradient descent stopped at max_iter={config.max_iter} without meeting tol")

    return LogisticModel(
        coef=coef,
        names=(INTERCEPT,) + names,
        theta_std=theta,
        mean=mean,
        scale=scale,
        iterations=it,
        final_loss=J,
        converged=converged,
        separated=separated,
        loss_history=tuple(history),
        dropped=dropped,
        separating_direction=rep_dir,
        notes=tuple(notes),
    )


def _to_reporting(theta: np.ndarray, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    slopes = theta[1:] / scale
    return np.concatenate([[theta[0] - np.sum(slopes * mean)], slopes])


# --------------------------------------------------------------------------
# Prediction
# --------------------------------------------------------------------------

def _model_matrix(model: LogisticModel, features) -> np.ndarray:
    if isinstance(features, FeatureTable):
        missing = [n for n in model.features if n not in features.columns]
        if missing:
            raise FeatureMismatchError(f"features missing from input: {', '.join(missing)}")
        return np.asarray(features.select(model.features).values, dtype=float)
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[1] != len(model.features):
        raise FeatureMismatchError(f"expected {len(model.features)} feature columns, got {X.shape[1]}")
    return X


def predict_proba(model: LogisticModel, features) -> np.ndarray:
    return sigmoid(_design(_model_matrix(model, features)) @ model.coef)


def predict(model: LogisticModel, row, cutoff: float = 0.5) -> tuple[float, int]:
    """Probability and class for one row; class is 1 when probability >= cutoff.

    ``row`` is a mapping from feature name to value, or a sequence aligned with
    ``model.features``.
    """
    if isinstance(row, Mapping):
        missing = [n for n in model.features if n not in row]
        if missing:
            raise FeatureMismatchError(f"row is missing feature(s): {', '.join(missing)}")
        x = np.array([float(row[n]) for n in model.features])
    else:
        x = np.asarray(row, dtype=float).ravel()
        if x.shape[0] != len(model.features):
            raise FeatureMismatchError(f"expected {len(model.features)} features, got {x.shape[0]}")
    p = float(sigmoid(model.coef[0] + x @ model.coef[1:]))
    return p, int(p >= cutoff)


# --------------------------------------------------------------------------
# Confusion matrix
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed measured-then-predicted: n01 is measured 0, predicted 1."""

    n00: int
    n01: int
    n10: int
    n11: int
    cutoff: float = 0.5

    @property
    def total(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    @staticmethod
    def _pct(num: int, den: int) -> float:
        return 100.0 * num / den if den else math.nan

    @property
    def percent_correct_0(self) -> float:
        return self._pct(self.n00, self.n00 + self.n01)

    @property
    def percent_correct_1(self) -> float:
        return self._pct(self.n11, self.n10 + self.n11)

    @property
    def overall(self) -> float:
        return self._pct(self.n00 + self.n11, self.total)

    @classmethod
    def from_predictions(cls, labels, predicted, cutoff: float = 0.5) -> ConfusionMatrix:
        y = np.asarray(labels).astype(int).ravel()
        p = np.asarray(predicted).astype(int).ravel()
        return cls(
            int(np.sum((y == 0) & (p == 0))),
            int(np.sum((y == 0) & (p == 1))),
            int(np.sum((y == 1) & (p == 0))),
            int(np.sum((y == 1) & (p == 1))),
            cutoff,
        )

    def to_dict(self) -> dict:
        return {
            "counts": {"n00": self.n00, "n01": self.n01, "n10": self.n10, "n11": self.n11},
            "percent_correct": {"0": _r1(self.percent_correct_0), "1": _r1(self.percent_correct_1)},
            "overall_percent": _r1(self.overall),
            "cutoff": self.cutoff,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["measured", "predicted_0", "predicted_1", "percent_correct"])
        w.writerow([0, self.n00, self.n01, _fmt1(self.percent_correct_0)])
        w.writerow([1, self.n10, self.n11, _fmt1(self.percent_correct_1)])
        w.writerow(["overall", "", "", _fmt1(self.overall)])
        return buf.getvalue()


def _r1(x: float):
    return None if math.isnan(x) else round(x, 1)


def _fmt1(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.1f}"


def confusion(model: LogisticModel, features, labels, cutoff: float = 0.5) -> ConfusionMatrix:
    y = np.asarray(labels).ravel()
    if y.size == 0:
        raise DomainError("confusion matrix of an empty sample set")
    p = predict_proba(model, features)
    return ConfusionMatrix.from_predictions(y, p >= cutoff, cutoff)


# --------------------------------------------------------------------------
# Wald inference
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefRow:
    name: str
    B: float
    se: float
    wald: float
    df: int
    p_value: float
    exp_b: float


@dataclass(frozen=True)
class InferenceTable:
    rows: tuple[CoefRow, ...]
    chi_square: float
    chi_df: int
    chi_significance: float
    log_likelihood: float
    null_log_likelihood: float
    cox_snell_r2: float
    nagelkerke_r2: float
    n: int
    notes: tuple[str, ...] = field(default=())

    @property
    def minus_2ll(self) -> float:
        return -2.0 * self.log_likelihood

    def row(self, name: str) -> CoefRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "coefficients": [
                {"name": r.name, "B": r.B, "Standard Error": _jf(r.se), "Wald": r.wald,
                 "df": r.df, "P-Value": r.p_value, "Exp(B)": _jf(r.exp_b)}
                for r in self.rows
            ],
            "omnibus": {"chi_square": self.chi_square, "df": self.chi_df,
                        "significance": self.chi_significance},
            "log_likelihood": self.log_likelihood,
            "minus_2_log_likelihood": self.minus_2ll,
            "null_log_likelihood": self.null_log_likelihood,
            "cox_snell_r2": self.cox_snell_r2,
            "nagelkerke_r2": self.nagelkerke_r2,
            "n": self.n,
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["", "B", "Standard Error", "Wald", "df", "P-Value", "Exp(B)"])
        for r in self.rows:
            w.writerow([r.name, _g(r.B), _g(r.se), _g(r.wald), r.df, _g(r.p_value), _g(r.exp_b)])
        return buf.getvalue()


def _jf(x: float):
    # JSON has no infinity; keep it readable as a string
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _g(x: float) -> str:
    return f"{x:.6g}"


def _log_likelihood(X: np.ndarray, beta: np.ndarray, y: np.ndarray) -> float:
    h = np.clip(sigmoid(X @ beta), _EPS, 1.0 - _EPS)
    return float(np.sum(y * np.log(h) + (1.0 - y) * np.log(1.0 - h)))


def _unidentified(H: np.ndarray, direction: np.ndarray | None) -> np.ndarray:
    """Boolean mask of coefficients lying in the null space of H or along a
    separating direction."""
    bad = np.zeros(H.shape[0], dtype=bool)
    d = np.sqrt(np.clip(np.diag(H), 0, None))
    bad |= d == 0
    ok = ~bad
    if ok.any():
        Hs = H[np.ix_(ok, ok)] / np.outer(d[ok], d[ok])
        w, V = np.linalg.eigh(Hs)
        null = w < 1e-12 * max(w.max(), 1.0)
        if null.any():
            load = np.abs(V[:, null]).max(axis=1) > 1e-6
            idx = np.flatnonzero(ok)
            bad[idx[load]] = True
    if direction is not None:
        scale = np.abs(direction).max()
        bad |= np.abs(direction) > 1e-8 * scale
    return bad


def wald_inference(model: LogisticModel, features, labels) -> InferenceTable:
    """Standard errors from the inverse observed information at the fitted
    coefficients, Wald chi-square(1) tests, omnibus likelihood-ratio test and
    pseudo R-squared values.

    Coefficients that the data cannot identify (separation, singular
    information) get an infinite standard error, Wald 0 and p-value 1.
    """
    Xf = _model_matrix(model, features)
    y = np.asarray(labels, dtype=float).ravel()
    m = y.shape[0]
    if m == 0:
        raise DomainError("inference on an empty sample set")
    X = _design(Xf)
    beta = model.coef
    h = sigmoid(X @ beta)
    H = (X * (h * (1.0 - h))[:, None]).T @ X

    bad = _unidentified(H, model.separating_direction if model.separated else None)
    se = np.full(beta.shape, np.inf)
    good = np.flatnonzero(~bad)
    if good.size:
        try:
            cov = np.linalg.inv(H[np.ix_(good, good)])
            se[good] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        except np.linalg.LinAlgError:
            pass

    notes = list(model.notes)
    if np.isinf(se).any():
        names = [n for n, s in zip(model.names, se) if np.isinf(s)]
        notes.append(f"separation or singular information: infinite standard error for {', '.join(names)}")

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        wald = np.where(np.isfinite(se) & (se > 0), (beta / se) ** 2, 0.0)
        exp_b = np.exp(beta)
    p = stats.chi2.sf(wald, 1)

    ll = _log_likelihood(X, beta, y)
    rate = y.mean()
    ll_null = float(m * (rate * math.log(rate) + (1 - rate) * math.log(1 - rate)))
    chi = max(0.0, 2.0 * (ll - ll_null))
    k = len(model.features)
    sig = float(stats.chi2.sf(chi, k)) if k > 0 else 1.0
    cox = 1.0 - math.exp((2.0 / m) * (ll_null - ll))
    nag = cox / (1.0 - math.exp((2.0 / m) * ll_null))

    # constant last, as in the usual coefficient table layout
    order = list(range(1, len(beta))) + [0]
    rows = tuple(
        CoefRow(model.names[j], float(beta[j]), float(se[j]), float(wald[j]), 1, float(p[j]), float(exp_b[j]))
        for j in order
    )
    return InferenceTable(rows, chi, k, sig, ll, ll_null, cox, nag, m, tuple(notes))
