"""Parsing, validation and numeric encoding of point-by-point match files.

The accepted layout is the public Wimbledon point-by-point format: one row per
point, a header naming the columns (``match_id``, ``player1`` ... ``return_depth``).
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
import warnings
from dataclasses import dataclass, field, fields
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    ConstantColumnWarning,
    EmptyDatasetError,
    EncodingError,
    RowError,
    SchemaError,
    UnknownColumnError,
    UsageError,
)

log = logging.getLogger(__name__)

SCORE_TOKENS = ("0", "15", "30", "40", "AD")
MISSING_TOKENS = frozenset({"", "NA", "N/A", "NaN", "nan", "null", "None"})
TIEBREAK_GAME = 13

SERVE_WIDTH_LEVELS = ("B", "BC", "BW", "C", "W")
SERVE_DEPTH_LEVELS = ("CTL", "NCTL")
RETURN_DEPTH_LEVELS = ("D", "ND")
SHOT_TYPE_LEVELS = ("B", "F")
# winner_shot_type is blank (or "0") on points without a winner; that is a level,
# not a missing value.
NO_SHOT = "0"

FLAG_COLUMNS = tuple(
    f"p{k}_{name}"
    for name in (
        "ace",
        "winner",
        "double_fault",
        "unf_err",
        "net_pt",
        "net_pt_won",
        "break_pt",
        "break_pt_won",
        "break_pt_missed",
    )
    for k in (1, 2)
)


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # text | time | int | float | score | flag | cat
    nullable: bool = False
    low: float | None = None
    high: float | None = None
    levels: tuple[str, ...] = ()


def _cols() -> tuple[ColumnSpec, ...]:
    specs = [
        ColumnSpec("match_id", "text"),
        ColumnSpec("player1", "text"),
        ColumnSpec("player2", "text"),
        ColumnSpec("elapsed_time", "time"),
        ColumnSpec("set_no", "int", low=1),
        ColumnSpec("game_no", "int", low=1),
        ColumnSpec("point_no", "int", low=1),
        ColumnSpec("p1_sets", "int", low=0, high=2),
        ColumnSpec("p2_sets", "int", low=0, high=2),
        ColumnSpec("p1_games", "int", low=0, high=7),
        ColumnSpec("p2_games", "int", low=0, high=7),
        ColumnSpec("p1_score", "score"),
        ColumnSpec("p2_score", "score"),
        ColumnSpec("server", "int", low=1, high=2),
        ColumnSpec("serve_no", "int", low=1, high=2),
        ColumnSpec("point_victor", "int", low=1, high=2),
        ColumnSpec("p1_points_won", "int", low=0),
        ColumnSpec("p2_points_won", "int", low=0),
        ColumnSpec("game_victor", "int", low=0, high=2),
        ColumnSpec("set_victor", "int", low=0, high=2),
        ColumnSpec("p1_ace", "flag"),
        ColumnSpec("p2_ace", "flag"),
        ColumnSpec("p1_winner", "flag"),
        ColumnSpec("p2_winner", "flag"),
        ColumnSpec("winner_shot_type", "cat", nullable=True, levels=SHOT_TYPE_LEVELS),
    ]
    for name in ("double_fault", "unf_err", "net_pt", "net_pt_won", "break_pt",
                 "break_pt_won", "break_pt_missed"):
        specs += [ColumnSpec(f"p1_{name}", "flag"), ColumnSpec(f"p2_{name}", "flag")]
    specs += [
        ColumnSpec("p1_distance_run", "float", low=0.0),
        ColumnSpec("p2_distance_run", "float", low=0.0),
        ColumnSpec("rally_count", "int", low=1),
        ColumnSpec("speed_mph", "float", nullable=True, low=0.0),
        ColumnSpec("serve_width", "cat", nullable=True, levels=SERVE_WIDTH_LEVELS),
        ColumnSpec("serve_depth", "cat", nullable=True, levels=SERVE_DEPTH_LEVELS),
        ColumnSpec("return_depth", "cat", nullable=True, levels=RETURN_DEPTH_LEVELS),
    ]
    return tuple(specs)


SCHEMA: tuple[ColumnSpec, ...] = _cols()
COLUMN_NAMES = tuple(c.name for c in SCHEMA)
CATEGORICAL_COLUMNS = tuple(c.name for c in SCHEMA if c.kind == "cat")
_SPEC_BY_NAME = {c.name: c for c in SCHEMA}

# Misspellings that appear in published tables of this data.
COLUMN_ALIASES = {"serve_4idth": "serve_width", "return_1epth": "return_depth"}


@dataclass(frozen=True, slots=True)
class PointRecord:
    match_id: str
    player1: str
    player2: str
    elapsed_time: int
    set_no: int
    game_no: int
    point_no: int
    p1_sets: int
    p2_sets: int
    p1_games: int
    p2_games: int
    p1_score: str
    p2_score: str
    server: int
    serve_no: int
    point_victor: int
    p1_points_won: int
    p2_points_won: int
    game_victor: int
    set_victor: int
    p1_ace: int
    p2_ace: int
    p1_winner: int
    p2_winner: int
    winner_shot_type: str
    p1_double_fault: int
    p2_double_fault: int
    p1_unf_err: int
    p2_unf_err: int
    p1_net_pt: int
    p2_net_pt: int
    p1_net_pt_won: int
    p2_net_pt_won: int
    p1_break_pt: int
    p2_break_pt: int
    p1_break_pt_won: int
    p2_break_pt_won: int
    p1_break_pt_missed: int
    p2_break_pt_missed: int
    p1_distance_run: float
    p2_distance_run: float
    rally_count: int
    speed_mph: float | None
    serve_width: str | None
    serve_depth: str | None
    return_depth: str | None

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.set_no, self.game_no, self.point_no)

    @property
    def is_tiebreak(self) -> bool:
        return self.game_no == TIEBREAK_GAME


assert tuple(f.name for f in fields(PointRecord)) == COLUMN_NAMES


@dataclass(frozen=True)
class MatchDataset:
    """Ordered, validated point records, possibly spanning several matches."""

    records: tuple[PointRecord, ...]
    unknown_columns: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PointRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def match_ids(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(r.match_id for r in self.records))

    def match(self, match_id: str) -> MatchDataset:
        return self.filter(lambda r: r.match_id == match_id)

    def matches(self) -> dict[str, MatchDataset]:
        groups: dict[str, list[PointRecord]] = {}
        for r in self.records:
            groups.setdefault(r.match_id, []).append(r)
        return {k: MatchDataset(tuple(v), self.unknown_columns) for k, v in groups.items()}

    def players(self, match_id: str | None = None) -> tuple[str, str]:
        for r in self.records:
            if match_id is None or r.match_id == match_id:
                return (r.player1, r.player2)
        raise KeyError(match_id)

    def filter(self, predicate) -> MatchDataset:
        return MatchDataset(tuple(r for r in self.records if predicate(r)), self.unknown_columns)

    def column(self, name: str) -> list:
        name = COLUMN_ALIASES.get(name, name)
        if name not in _SPEC_BY_NAME:
            raise UnknownColumnError(f"unknown column {name!r}")
        return [getattr(r, name) for r in self.records]

    def summary(self) -> dict[str, dict]:
        return {
            mid: {"players": list(m.players()), "points": len(m)}
            for mid, m in self.matches().items()
        }


@dataclass(frozen=True)
class FeatureTable:
    """Row-aligned numeric matrix built from a MatchDataset.

    ``mask`` has one entry per source record; True rows are retained and appear,
    in order, as the rows of ``values``.
    """

    values: np.ndarray
    columns: tuple[str, ...]
    provenance: tuple[str, ...]
    mask: np.ndarray
    levels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_dropped(self) -> int:
        return int(self.mask.size - self.mask.sum())

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select(self, names: Sequence[str]) -> FeatureTable:
        idx = [self.columns.index(n) for n in names]
        return FeatureTable(
            _frozen(self.values[:, idx]),
            tuple(self.columns[i] for i in idx),
            tuple(self.provenance[i] for i in idx),
            self.mask,
            self.levels,
            self.warnings,
        )

    def with_column(self, name: str, values, provenance: str = "derived") -> FeatureTable:
        values = np.asarray(values, dtype=float).reshape(-1, 1)
        return FeatureTable(
            _frozen(np.hstack([self.values, values])),
            self.columns + (name,),
            self.provenance + (provenance,),
            self.mask,
            self.levels,
            self.warnings,
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# Cell parsing
# --------------------------------------------------------------------------

def parse_elapsed(text: str) -> int:
    """'H:MM:SS' (or 'MM:SS') to whole seconds."""
    parts = text.strip().split(":")
    if not 2 <= len(parts) <= 3 or not all(p.isdigit() for p in parts):
        raise ValueError(f"bad elapsed_time {text!r}")
    secs = 0
    for p in parts:
        secs = secs * 60 + int(p)
    return secs


def format_elapsed(seconds: int) -> str:
    h, rem = divmod(int(seconds), 3600)
    m, s = divmod(rem, 60)
    return f"{h}:{m:02d}:{s:02d}"


def encode_score(token) -> int:
    """Ordinal of an in-game score token: 0, 15, 30, 40, AD -> 0..4."""
    t = str(token).strip().upper()
    try:
        return SCORE_TOKENS.index(t)
    except ValueError:
        raise EncodingError(f"unknown score token {token!r}") from None


def _parse_int(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _parse_cell(spec: ColumnSpec, raw: str, game_no: int | None):
    text = raw.strip()
    if spec.kind == "cat" and spec.name == "winner_shot_type":
        if text in MISSING_TOKENS or text == NO_SHOT:
            return NO_SHOT
        if text not in spec.levels:
            raise ValueError(f"{spec.name}: unknown level {text!r}")
        return text
    if text in MISSING_TOKENS:
        if spec.nullable:
            return None
        raise ValueError(f"{spec.name}: missing required value")
    if spec.kind == "text":
        return raw
    if spec.kind == "time":
        return parse_elapsed(text)
    if spec.kind == "score":
        if text.upper() in SCORE_TOKENS:
            return text.upper()
        # tie-break games count points instead of using 15/30/40
        if game_no == TIEBREAK_GAME and text.isdigit():
            return text
        raise ValueError(f"{spec.name}: unknown score token {text!r}")
    if spec.kind == "cat":
        if text not in spec.levels:
            raise ValueError(f"{spec.name}: unknown level {text!r}")
        return text
    if spec.kind == "float":
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"{spec.name}: non-finite value {text!r}")
    else:
        value = _parse_int(text)
        if spec.kind == "flag" and value not in (0, 1):
            raise ValueError(f"{spec.name}: flag must be 0 or 1, got {text!r}")
    if spec.low is not None and value < spec.low:
        raise ValueError(f"{spec.name}: {value} below {spec.low}")
    if spec.high is not None and value > spec.high:
        raise ValueError(f"{spec.name}: {value} above {spec.high}")
    return value


# --------------------------------------------------------------------------
# CSV in / out
# --------------------------------------------------------------------------

def parse_match_csv(source, schema: Sequence[ColumnSpec] = SCHEMA, strict: bool = True) -> MatchDataset:
    """Parse CSV text into a MatchDataset.

    ``source`` may be bytes, a text or binary stream, or a path-like object.
    Unknown columns are ignored and reported; rows are reordered by
    (set_no, game_no, point_no) within each match. With ``strict`` the
    cumulative points-won counters and elapsed times are checked against the
    row order.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDatasetError("input is empty (no header row)") from None
    header = [COLUMN_ALIASES.get(h.strip().lstrip("﻿"), h.strip().lstrip("﻿")) for h in header]

    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise SchemaError(f"duplicate columns in header: {', '.join(dupes)}")
    names = [c.name for c in schema]
    missing = [n for n in names if n not in header]
    if missing:
        raise SchemaError(f"header is missing columns: {', '.join(missing)}")
    unknown = tuple(h for h in header if h not in _SPEC_BY_NAME)
    for name in unknown:
        log.warning("row 1: unknown column %r ignored", name)

    pos = {h: i for i, h in enumerate(header)}
    game_idx = pos["game_no"]
    rows: list[tuple[int, PointRecord]] = []
    for cells in reader:
        lineno = reader.line_num
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise RowError(lineno, f"expected {len(header)} cells, found {len(cells)}")
        try:
            game_no = _parse_int(cells[game_idx])
        except ValueError:
            game_no = None
        values = {}
        for spec in SCHEMA:
            try:
                values[spec.name] = _parse_cell(spec, cells[pos[spec.name]], game_no)
            except ValueError as exc:
                raise RowError(lineno, str(exc)) from None
        rows.append((lineno, PointRecord(**values)))

    if not rows:
        raise EmptyDatasetError("input has a header but no data rows")
    return MatchDataset(_order_and_check(rows, strict), unknown)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str) and "\n" in source:
        return source
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8-sig") if isinstance(data, bytes) else data
    with open(source, encoding="utf-8-sig", newline="") as fh:
        return fh.read()


def _order_and_check(rows: list[tuple[int, PointRecord]], strict: bool) -> tuple[PointRecord, ...]:
    by_match: dict[str, list[tuple[int, PointRecord]]] = {}
    for lineno, rec in rows:
        by_match.setdefault(rec.match_id, []).append((lineno, rec))

    out: list[PointRecord] = []
    for match_rows in by_match.values():
        match_rows.sort(key=lambda t: t[1].key)
        seen: dict[tuple[int, int, int], int] = {}
        prev = None
        for i, (lineno, rec) in enumerate(match_rows):
            if rec.key in seen:
                raise RowError(lineno, f"duplicate point {rec.key} in match {rec.match_id} "
                                       f"(first seen on row {seen[rec.key]})")
            seen[rec.key] = lineno
            if strict:
                if prev is not None and rec.elapsed_time < prev.elapsed_time:
                    raise RowError(lineno, "elapsed_time decreases within the match")
                if rec.p1_points_won + rec.p2_points_won != i + 1:
                    raise RowError(lineno, f"points won ({rec.p1_points_won}+{rec.p2_points_won}) "
                                           f"does not equal point count {i + 1}")
            prev = rec
            out.append(rec)
    return tuple(out)


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_match_csv(dataset: MatchDataset, stream=None, columns: Sequence[str] = COLUMN_NAMES) -> str:
    """Serialize records back to CSV in ``columns`` order. Returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in dataset:
        row = []
        for name in columns:
            v = getattr(r, name)
            if name == "elapsed_time":
                row.append(format_elapsed(v))
            elif name == "winner_shot_type" and v == NO_SHOT:
                row.append(NO_SHOT)
            else:
                row.append(_format_value(v))
        w.writerow(row)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# --------------------------------------------------------------------------
# Numeric encoding
# --------------------------------------------------------------------------

def _check_column(name: str) -> str:
    name = COLUMN_ALIASES.get(name, name)
    if name not in _SPEC_BY_NAME:
        raise UnknownColumnError(f"unknown column {name!r}")
    return name


def _numeric_value(rec: PointRecord, name: str) -> float:
    spec = _SPEC_BY_NAME[name]
    v = getattr(rec, name)
    if v is None:
        return math.nan
    if spec.kind == "score":
        return float(encode_score(v)) if v in SCORE_TOKENS else float(v)
    if spec.kind == "text":
        raise EncodingError(f"column {name!r} is text and has no numeric encoding")
    return float(v)


def build_features(
    dataset: MatchDataset,
    columns: Sequence[str],
    encoding: str = "onehot",
    levels: Mapping[str, Sequence[str]] | None = None,
) -> FeatureTable:
    """Numeric design matrix for ``columns``, in the given order.

    Categorical columns expand to k-1 indicator columns (reference level is the
    lexicographically first observed level) or, with ``encoding="ordinal"``, to
    a single column holding the level's sorted index. Rows missing any requested
    value are masked out. Pass ``levels`` from a training table to encode a test
    set identically.
    """
    if encoding not in ("onehot", "ordinal"):
        raise UsageError(f"encoding must be 'onehot' or 'ordinal', not {encoding!r}")
    names = [_check_column(c) for c in columns]
    n = len(dataset)
    mask = np.ones(n, dtype=bool)
    raw: dict[str, list] = {}
    for name in names:
        vals = [getattr(r, name) for r in dataset]
        raw[name] = vals
        mask &= np.array([v is not None for v in vals], dtype=bool)

    notes: list[str] = []
    out_cols: list[np.ndarray] = []
    out_names: list[str] = []
    prov: list[str] = []
    used_levels: dict[str, tuple[str, ...]] = {}
    keep = np.flatnonzero(mask)
    for name in names:
        spec = _SPEC_BY_NAME[name]
        if spec.kind != "cat":
            col = np.array([_numeric_value(dataset[i], name) for i in keep], dtype=float)
            out_cols.append(col)
            out_names.append(name)
            prov.append("ordinal" if spec.kind == "score" else "raw")
            continue
        observed = [raw[name][i] for i in keep]
        if levels is not None and name in levels:
            lv = tuple(levels[name])
            unseen = sorted(set(observed) - set(lv))
            if unseen:
                msg = f"{name}: levels {unseen} unseen in training, encoded as reference"
                notes.append(msg)
                warnings.warn(msg, ConstantColumnWarning, stacklevel=2)
        else:
            lv = tuple(sorted(set(observed)))
        used_levels[name] = lv
        if encoding == "ordinal":
            index = {v: float(j) for j, v in enumerate(lv)}
            out_cols.append(np.array([index.get(v, 0.0) for v in observed], dtype=float))
            out_names.append(name)
            prov.append("ordinal")
            continue
        if len(lv) <= 1:
            msg = f"{name}: only {len(lv)} observed level(s), no indicator columns"
            notes.append(msg)
            warnings.warn(msg, ConstantColumnWarning, stacklevel=2)
        for level in lv[1:]:
            out_cols.append(np.array([1.0 if v == level else 0.0 for v in observed]))
            out_names.append(f"{name}={level}")
            prov.append(f"onehot:{name}")

    values = np.column_stack(out_cols) if out_cols else np.empty((len(keep), 0))
    return FeatureTable(_frozen(values), tuple(out_names), tuple(prov), mask, used_levels, tuple(notes))


def one_hot_encode(
    dataset: MatchDataset,
    columns: Sequence[str],
    levels: Mapping[str, Sequence[str]] | None = None,
) -> FeatureTable:
    """k-1 indicator columns for each named categorical column."""
    names = [_check_column(c) for c in columns]
    for name in names:
        if _SPEC_BY_NAME[name].kind != "cat":
            raise EncodingError(f"column {name!r} is not categorical")
    return build_features(dataset, names, encoding="onehot", levels=levels)


# --------------------------------------------------------------------------
# Key games
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyGameRule:
    """A game is key if any enabled clause matches any of its points.

    ``break_points``: a break point occurs in the game.
    ``min_games``: either player already holds at least this many games in the set.
    """

    break_points: bool = True
    min_games: int | None = 5

    @classmethod
    def parse(cls, text: str) -> KeyGameRule:
        """Parse ``"break,games>=5"``-style rules; ``"none"`` matches nothing."""
        brk, min_games = False, None
        for token in (t.strip().lower() for t in text.split(",")):
            if not token or token == "none":
                continue
            if token == "break":
                brk = True
                continue
            m = re.fullmatch(r"games\s*>=\s*(\d+)", token)
            if not m:
                raise UsageError(f"bad key-game rule token {token!r}; use 'break' and/or 'games>=N'")
            min_games = int(m.group(1))
        return cls(brk, min_games)

    def __str__(self) -> str:
        parts = (["break"] if self.break_points else []) + (
            [f"games>={self.min_games}"] if self.min_games is not None else [])
        return ",".join(parts) or "none"

    def matches(self, rec: PointRecord) -> bool:
        if self.break_points and (rec.p1_break_pt or rec.p2_break_pt):
            return True
        return self.min_games is not None and max(rec.p1_games, rec.p2_games) >= self.min_games


def select_key_games(dataset: MatchDataset, rule: KeyGameRule = KeyGameRule()) -> MatchDataset:
    """All points of every game matching ``rule``."""
    key_games = {(r.match_id, r.set_no, r.game_no) for r in dataset if rule.matches(r)}
    return dataset.filter(lambda r: (r.match_id, r.set_no, r.game_no) in key_games)

