"""The four analyses (momentum, randomness, swing, factors) wired end to end."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import chart
from .errors import (
    DomainError,
    EmptySeriesError,
    EmptySubsetError,
    InsufficientDataError,
    MomentumWarning,
    SelectorError,
    UsageError,
)
from .ingest import (
    CATEGORICAL_COLUMNS,
    FeatureTable,
    KeyGameRule,
    MatchDataset,
    PointRecord,
    build_features,
    parse_match_csv,
    select_key_games,
)
from .logreg import TrainConfig, confusion, fit, wald_inference
from .stats import correlation_matrix, pca, top_factors
from .topsis import DEFAULT_WEIGHTS, WeightVector, momentum_series

FORMATS = ("csv", "json", "svg")

# Per-player feature set of the point-level regression; the prefix is resolved
# to the analysed player.
REGRESSION_FEATURES = (
    "ace", "winner", "winner_shot_type", "double_fault", "unf_err", "net_pt",
    "net_pt_won", "break_pt", "break_pt_won", "distance_run",
    "speed_mph", "serve_width", "serve_depth", "return_depth",
)
INDICATOR_FEATURES = (
    "ace", "winner", "winner_shot_type", "double_fault", "unf_err", "net_pt",
    "net_pt_won", "break_pt", "break_pt_won", "break_pt_missed", "distance_run",
    "speed_mph", "serve_width", "serve_depth", "return_depth",
)
_SHARED = set(CATEGORICAL_COLUMNS) | {"speed_mph"}


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    match: str | None = None
    player: str | None = None
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    train: TrainConfig = TrainConfig()
    key_rule: KeyGameRule = KeyGameRule()
    out_dir: str | None = None
    formats: tuple[str, ...] = FORMATS
    set_no: int | None = None
    encoding: str = "onehot"
    nonrandom_threshold: float = 70.0
    holdout: float = 0.0
    train_matches: tuple[str, ...] = ()
    test_match: str | None = None
    p_threshold: float = 0.05
    top_k: int = 3
    raw_chart: bool = False

    def __post_init__(self):
        WeightVector(tuple(self.weights))
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise UsageError(f"unknown output format(s): {', '.join(sorted(bad))}")
        if not 0.0 <= self.holdout < 1.0:
            raise UsageError(f"holdout must lie in [0, 1), got {self.holdout}")
        if self.encoding not in ("onehot", "ordinal"):
            raise UsageError(f"encoding must be onehot or ordinal, got {self.encoding!r}")


@dataclass
class StudyReport:
    study: str
    fingerprint: dict
    payload: dict
    warnings: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    results: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"study": self.study, "fingerprint": self.fingerprint,
                "payload": self.payload, "warnings": self.warnings}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else (None if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Collector:
    """Records every package warning raised inside the block, in order."""

    def __init__(self):
        self.messages: list[str] = []

    def __enter__(self):
        self._cm = warnings.catch_warnings(record=True)
        self._log = self._cm.__enter__()
        warnings.simplefilter("always", MomentumWarning)
        return self

    def __exit__(self, *exc):
        self._cm.__exit__(*exc)
        for w in self._log:
            if issubclass(w.category, MomentumWarning):
                self.add(str(w.message))
            else:
                warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        return False

    def add(self, *messages: str):
        for m in messages:
            if m not in self.messages:
                self.messages.append(m)


# --------------------------------------------------------------------------
# Loading and selection
# --------------------------------------------------------------------------

def load_dataset(config: RunConfig) -> MatchDataset:
    if not config.inputs:
        raise UsageError("no input file given (--input)")
    records: list[PointRecord] = []
    unknown: list[str] = []
    for path in config.inputs:
        try:
            ds = parse_match_csv(path)
        except FileNotFoundError:
            raise UsageError(f"input file not found: {path}") from None
        records.extend(ds.records)
        unknown.extend(c for c in ds.unknown_columns if c not in unknown)
    return MatchDataset(tuple(records), tuple(unknown))


def select_match(dataset: MatchDataset, match_id: str | None) -> MatchDataset:
    ids = dataset.match_ids
    if match_id is None:
        if len(ids) == 1:
            return dataset
        raise SelectorError(f"dataset holds {len(ids)} matches; choose one with --match")
    if match_id not in ids:
        raise SelectorError(f"unknown match id {match_id!r}")
    return dataset.match(match_id)


def resolve_player(match: MatchDataset, player: str | int | None, default: int | None = 1) -> int:
    """1 or 2 for a selector that is an index or a player's name."""
    if player is None or player == "":
        if default is None:
            raise SelectorError("choose a player with --player")
        return default
    text = str(player).strip()
    if text in ("1", "2"):
        return int(text)
    p1, p2 = match.players()
    if text.lower() == p1.lower():
        return 1
    if text.lower() == p2.lower():
        return 2
    raise SelectorError(f"player {text!r} does not play in match {match.match_ids[0]} ({p1} vs {p2})")


def player_features(dataset: MatchDataset, player: int, columns: Sequence[str],
                    encoding: str = "onehot", levels=None) -> FeatureTable:
    """Feature table with the player's own columns, prefix removed (``p1_ace`` -> ``ace``)."""
    source = [c if c in _SHARED else f"p{player}_{c}" for c in columns]
    table = build_features(dataset, source, encoding=encoding, levels=levels)
    prefix = f"p{player}_"
    names = tuple(n[len(prefix):] if n.startswith(prefix) else n for n in table.columns)
    return FeatureTable(table.values, names, table.provenance, table.mask, table.levels, table.warnings)


def point_labels(dataset: MatchDataset, player: int) -> np.ndarray:
    return np.array([1.0 if r.point_victor == player else 0.0 for r in dataset])


def advantage_phase(rec: PointRecord, player: int) -> str:
    """Leading on sets, then games in the set, then points won before this point."""
    own, opp = (0, 1) if player == 1 else (1, 0)
    sets = (rec.p1_sets, rec.p2_sets)
    games = (rec.p1_games, rec.p2_games)
    won = [rec.p1_points_won, rec.p2_points_won]
    won[rec.point_victor - 1] -= 1
    for pair in (sets, games, won):
        if pair[own] != pair[opp]:
            return "advantage" if pair[own] > pair[opp] else "disadvantage"
    return "disadvantage"


def _fingerprint(rows_in: int, rows_used: int, **extra) -> dict:
    return {"rows_in": int(rows_in), "rows_used": int(rows_used),
            "rows_dropped": int(rows_in - rows_used), **extra}


def _write_outputs(config: RunConfig, report: StudyReport, files: dict[str, tuple[str, str]]):
    """``files`` maps file name -> (format, text)."""
    if config.out_dir is None:
        return
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (fmt, text) in files.items():
        if fmt in config.formats:
            (out / name).write_text(text, encoding="utf-8", newline="\n")
            report.files.append(str(out / name))
    if "json" in config.formats:
        (out / f"{report.study}_report.json").write_text(report.to_json(), encoding="utf-8", newline="\n")
        report.files.append(str(out / f"{report.study}_report.json"))


# --------------------------------------------------------------------------
# Studies
# --------------------------------------------------------------------------

def run_momentum(config: RunConfig, dataset: MatchDataset | None = None) -> StudyReport:
    """Per-point TOPSIS closeness for both players of one match, with charts."""
    dataset = load_dataset(config) if dataset is None else dataset
    with _Collector() as col:
        match = select_match(dataset, config.match)
        if len(match) == 0:
            raise EmptySeriesError("selected match has no points")
        series = momentum_series(match, config.weights)
        col.add(*series.warnings)
        diff = series.closeness[:, 0] - series.closeness[:, 1]
        signs = np.sign(diff[diff != 0])
        payload = {
            "match_id": series.match_id,
            "players": list(series.players),
            "weights": list(config.weights),
            "n_points": len(series),
            "mean_closeness": [float(v) for v in series.closeness.mean(axis=0)],
            "final_closeness": [float(v) for v in series.closeness[-1]],
            "points_player1_ahead": int(np.sum(diff > 0)),
            "points_player2_ahead": int(np.sum(diff < 0)),
            "lead_changes": int(np.sum(signs[1:] != signs[:-1])),
            "sets": sorted(int(s) for s in set(series.set_no.tolist())),
        }
        files: dict[str, tuple[str, str]] = {"momentum_series.csv": ("csv", series.to_csv())}
        if "svg" in config.formats:
            mode = "points" if config.raw_chart else "closeness"
            cum = np.array([[r.p1_points_won, r.p2_points_won] for r in match]) if config.raw_chart else None
            files["momentum_whole.svg"] = ("svg", chart.emit_chart(series, "whole", mode=mode, cumulative_points=cum))
            for s in payload["sets"]:
                files[f"momentum_set{s}.svg"] = ("svg", chart.emit_chart(series, s, mode=mode, cumulative_points=cum))
    report = StudyReport("momentum", _fingerprint(len(match), len(match)), payload, col.messages,
                         results={"series": series})
    _write_outputs(config, report, files)
    return report


def _split(n: int, holdout: float) -> tuple[np.ndarray, np.ndarray]:
    cut = n - int(round(n * holdout)) if holdout > 0 else n
    idx = np.arange(n)
    return idx[:cut], (idx[cut:] if holdout > 0 else idx)


def run_randomness(config: RunConfig, dataset: MatchDataset | None = None) -> StudyReport:
    """Does the player's per-point performance predict who wins the point?"""
    dataset = load_dataset(config) if dataset is None else dataset
    with _Collector() as col:
        match = select_match(dataset, config.match)
        player = resolve_player(match, config.player)
        subset = match if config.set_no is None else match.filter(lambda r: r.set_no == config.set_no)
        if len(subset) == 0:
            raise EmptySubsetError(f"no points in set {config.set_no} of {match.match_ids[0]}")
        table = player_features(subset, player, REGRESSION_FEATURES, config.encoding)
        col.add(*table.warnings)
        labels = point_labels(subset, player)[table.mask]
        train_idx, test_idx = _split(table.n_rows, config.holdout)
        model = fit(table.values[train_idx], labels[train_idx], config.train, names=table.columns)
        inference = wald_inference(model, _align(model, table, train_idx), labels[train_idx])
        cm = confusion(model, _align(model, table, test_idx), labels[test_idx], config.train.cutoff)
        col.add(*inference.notes)
        non_random = cm.overall > config.nonrandom_threshold
        payload = {
            "match_id": match.match_ids[0],
            "player": player,
            "player_name": match.players()[player - 1],
            "set_no": config.set_no,
            "holdout": config.holdout,
            "train_rows": int(len(train_idx)),
            "eval_rows": int(len(test_idx)),
            "model": _model_summary(model),
            "inference": inference.to_dict(),
            "confusion": cm.to_dict(),
            "threshold_percent": config.nonrandom_threshold,
            "verdict": "non-random" if non_random else "not distinguishable from random",
            "verdict_note": "accuracy threshold heuristic, not a hypothesis test",
        }
    report = StudyReport("randomness", _fingerprint(len(subset), table.n_rows), payload, col.messages,
                         results={"model": model, "inference": inference, "confusion": cm, "table": table})
    _write_outputs(config, report, {
        "randomness_inference.csv": ("csv", inference.to_csv()),
        "randomness_confusion.csv": ("csv", cm.to_csv()),
    })
    return report


def _align(model, table: FeatureTable, rows) -> np.ndarray:
    return table.select(model.features).values[rows]


def _model_summary(model) -> dict:
    return {
        "features": list(model.features),
        "dropped_constant": list(model.dropped),
        "iterations": model.iterations,
        "final_loss": model.final_loss,
        "converged": model.converged,
        "separated": model.separated,
    }


def _resolve_in(match: MatchDataset, player: str | None) -> int:
    return resolve_player(match, player, default=None)


def run_swing(config: RunConfig, dataset: MatchDataset | None = None,
              train_matches: Sequence[str] | None = None, test_match: str | None = None) -> StudyReport:
    """Fit per-phase models on key games of earlier matches, score a later match."""
    dataset = load_dataset(config) if dataset is None else dataset
    train_ids = tuple(train_matches if train_matches is not None else config.train_matches)
    test_id = test_match if test_match is not None else config.test_match
    if not train_ids or test_id is None:
        raise UsageError("swing needs --train and --test match ids")
    known = set(dataset.match_ids)
    for mid in train_ids + (test_id,):
        if mid not in known:
            raise SelectorError(f"unknown match id {mid!r}")
    if test_id in train_ids:
        raise UsageError(f"test match {test_id} is also listed for training")

    with _Collector() as col:
        def key_subset(mid: str):
            match = dataset.match(mid)
            player = _resolve_in(match, config.player)
            keyed = select_key_games(match, config.key_rule)
            if len(keyed) == 0:
                raise EmptySubsetError(
                    f"match {mid} has no key games under rule '{config.key_rule}'; "
                    "relax --key-rule (for example 'break,games>=3' or 'games>=1')")
            return match, player, keyed

        train_parts = [key_subset(mid) for mid in train_ids]
        _, test_player, test_keyed = key_subset(test_id)

        # Shared dummy levels: union of what the training matches show.
        levels: dict[str, set] = {}
        for _, player, keyed in train_parts:
            t = player_features(keyed, player, REGRESSION_FEATURES, config.encoding)
            for k, v in t.levels.items():
                levels.setdefault(k, set()).update(v)
        shared = {k: tuple(sorted(v)) for k, v in levels.items()}

        def assemble(parts):
            xs, ys, phases, rows_in = [], [], [], 0
            for _, player, keyed in parts:
                t = player_features(keyed, player, REGRESSION_FEATURES, config.encoding, levels=shared)
                col.add(*t.warnings)
                xs.append(t.values)
                ys.append(point_labels(keyed, player)[t.mask])
                phases.extend(advantage_phase(r, player) for r, k in zip(keyed, t.mask) if k)
                rows_in += len(keyed)
                names = t.columns
            return np.vstack(xs), np.concatenate(ys), np.array(phases), rows_in, names

        Xtr, ytr, ptr, in_tr, names = assemble(train_parts)
        Xte, yte, pte, in_te, _ = assemble([(None, test_player, test_keyed)])

        phases = {}
        correct = evaluated = 0
        for phase in ("advantage", "disadvantage"):
            tr, te = ptr == phase, pte == phase
            entry = {"train_rows": int(tr.sum()), "test_rows": int(te.sum())}
            if te.sum() == 0 or tr.sum() < 2 or len(set(ytr[tr].tolist())) < 2:
                msg = (f"{phase} phase skipped: {int(tr.sum())} training rows "
                       f"({len(set(ytr[tr].tolist()))} class(es)), {int(te.sum())} test rows")
                col.add(msg)
                entry["skipped"] = msg
                phases[phase] = entry
                continue
            model = fit(Xtr[tr], ytr[tr], config.train, names=names)
            idx = [names.index(n) for n in model.features]
            inference = wald_inference(model, Xtr[tr][:, idx], ytr[tr])
            cm = confusion(model, Xte[te][:, idx], yte[te], config.train.cutoff)
            col.add(*(f"{phase}: {n}" for n in inference.notes))
            correct += cm.n00 + cm.n11
            evaluated += cm.total
            entry.update(model=_model_summary(model), inference=inference.to_dict(), confusion=cm.to_dict())
            entry["_objects"] = (model, inference, cm)
            phases[phase] = entry

        if evaluated == 0:
            raise InsufficientDataError("no advantage phase had both training classes and test rows")

        pooled_model = fit(Xtr, ytr, config.train, names=names)
        idx = [names.index(n) for n in pooled_model.features]
        pooled_cm = confusion(pooled_model, Xte[:, idx], yte, config.train.cutoff)
        col.add(*(f"pooled: {n}" for n in pooled_model.notes))

    objects = {p: e.pop("_objects") for p, e in phases.items() if "_objects" in e}
    payload = {
        "train_matches": list(train_ids),
        "test_match": test_id,
        "key_rule": str(config.key_rule),
        "phases": phases,
        "phase_accuracy": 100.0 * correct / evaluated,
        "phase_rows_evaluated": evaluated,
        "pooled": {"model": _model_summary(pooled_model), "confusion": pooled_cm.to_dict()},
    }
    report = StudyReport("swing", _fingerprint(in_tr + in_te, len(ytr) + len(yte),
                                               train_rows=len(ytr), test_rows=len(yte)),
                         payload, col.messages,
                         results={"phases": objects, "pooled": (pooled_model, pooled_cm)})
    files = {}
    for phase, (_, inference, cm) in objects.items():
        files[f"swing_{phase}_inference.csv"] = ("csv", inference.to_csv())
        files[f"swing_{phase}_confusion.csv"] = ("csv", cm.to_csv())
    _write_outputs(config, report, files)
    return report


def run_factors(config: RunConfig, dataset: MatchDataset | None = None) -> StudyReport:
    """Spearman screening of indicators against point outcome, then PCA on the survivors."""
    dataset = load_dataset(config) if dataset is None else dataset
    with _Collector() as col:
        subset = dataset if config.match is None else select_match(dataset, config.match)
        if config.set_no is not None:
            subset = subset.filter(lambda r: r.set_no == config.set_no)
        if len(subset) == 0:
            raise EmptySubsetError("no points selected")
        player = resolve_player(subset, config.player)
        table = player_features(subset, player, INDICATOR_FEATURES, encoding="ordinal")
        if table.n_rows == 0:
            raise EmptySubsetError("every selected row is missing an indicator value")
        if np.all(np.ptp(table.values, axis=0) == 0):
            raise DomainError("every indicator column is constant")
        table = table.with_column("point_victor", point_labels(subset, player)[table.mask], "label")
        report = correlation_matrix(table, "point_victor")
        ranking = report.target_ranking()
        selected = [name for name, _, p in ranking if not math.isnan(p) and p < config.p_threshold]
        if len(selected) < 2:
            raise InsufficientDataError(
                f"p-value threshold {config.p_threshold} keeps {len(selected)} variable(s); "
                "PCA needs at least 2 (raise --p-threshold)")
        result = pca(table, selected)
        factors = top_factors(report, result, config.top_k)
        payload = {
            "player": player,
            "matches": list(subset.match_ids),
            "target": "point_victor",
            "constant_columns": list(report.constant_columns),
            "p_threshold": config.p_threshold,
            "selected": selected,
            "correlation": report.to_dict(),
            "pca": result.to_dict(),
            "top_factors": [{"name": f.name, "loading": f.loading, "p_value": f.p_value} for f in factors],
        }
    out = StudyReport("factors", _fingerprint(len(subset), table.n_rows), payload, col.messages,
                      results={"correlation": report, "pca": result, "factors": factors, "table": table})
    _write_outputs(config, out, {
        "factors_spearman_rho.csv": ("csv", report.to_csv("rho")),
        "factors_spearman_p.csv": ("csv", report.to_csv("p")),
        "factors_pca.csv": ("csv", result.to_csv()),
    })
    return out


STUDIES = {
    "momentum": run_momentum,
    "randomness": run_randomness,
    "swing": run_swing,
    "factors": run_factors,
}
