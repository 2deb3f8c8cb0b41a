import csv
import dataclasses
import io
import logging

import numpy as np
import pytest

from tennis_momentum.errors import (
    ConstantColumnWarning,
    EmptyDatasetError,
    EncodingError,
    RowError,
    SchemaError,
    UnknownColumnError,
    UsageError,
)
from tennis_momentum.ingest import (
    COLUMN_NAMES,
    KeyGameRule,
    MatchDataset,
    build_features,
    encode_score,
    format_elapsed,
    one_hot_encode,
    parse_elapsed,
    parse_match_csv,
    select_key_games,
    write_match_csv,
)
from tennis_momentum.synthetic import simulate_match


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _to_text(rows, header=COLUMN_NAMES):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


@pytest.fixture
def small():
    return simulate_match(n_points=12, seed=3)


@pytest.fixture
def small_rows(small):
    return _rows(write_match_csv(small))


def test_header_only_is_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        parse_match_csv(",".join(COLUMN_NAMES) + "\n")
    with pytest.raises(EmptyDatasetError):
        parse_match_csv(b"")


def test_elapsed_and_score_examples(small_rows):
    small_rows[0]["elapsed_time"] = "0:10:27"
    small_rows[0]["p1_score"] = "AD"
    small_rows[0]["p2_score"] = "40"
    ds = parse_match_csv(_to_text(small_rows), strict=False)
    assert ds[0].elapsed_time == 627
    assert encode_score(ds[0].p1_score) == 4
    assert parse_elapsed("0:10:27") == 627
    assert format_elapsed(627) == "0:10:27"


@pytest.mark.parametrize("token, value", [("0", 0), ("15", 1), ("30", 2), ("40", 3), ("AD", 4)])
def test_encode_score(token, value):
    assert encode_score(token) == value


def test_encode_score_rejects_unknown():
    with pytest.raises(EncodingError):
        encode_score("45")


def test_round_trip_is_exact(match300):
    again = parse_match_csv(write_match_csv(match300))
    assert again.records == match300.records


def test_sources_bytes_stream_and_path(tmp_path, small):
    text = write_match_csv(small)
    path = tmp_path / "m.csv"
    path.write_text(text)
    for src in (text.encode(), io.StringIO(text), path, str(path)):
        assert parse_match_csv(src).records == small.records


def test_missing_column_is_schema_error(small_rows):
    header = [c for c in COLUMN_NAMES if c != "rally_count"]
    for r in small_rows:
        del r["rally_count"]
    with pytest.raises(SchemaError, match="rally_count"):
        parse_match_csv(_to_text(small_rows, header))


def test_duplicate_column_is_schema_error(small):
    text = write_match_csv(small)
    lines = text.splitlines()
    lines = [lines[0] + ",speed_mph"] + [ln + ",1" for ln in lines[1:]]
    with pytest.raises(SchemaError, match="duplicate"):
        parse_match_csv("\n".join(lines) + "\n")


def test_unknown_column_ignored_and_logged(small, caplog):
    lines = write_match_csv(small).splitlines()
    lines = [lines[0] + ",umpire"] + [ln + ",x" for ln in lines[1:]]
    with caplog.at_level(logging.WARNING):
        ds = parse_match_csv("\n".join(lines) + "\n")
    assert ds.records == small.records
    assert "row 1: unknown column 'umpire' ignored" in caplog.text


def test_typo_aliases_accepted(small):
    text = write_match_csv(small).replace("serve_width", "serve_4idth", 1).replace("return_depth", "return_1epth", 1)
    assert parse_match_csv(text).records == small.records


@pytest.mark.parametrize("column, value", [
    ("p1_score", "50"), ("server", "3"), ("p1_ace", "2"), ("serve_width", "X"), ("elapsed_time", "ten"),
])
def test_bad_cell_names_row(small_rows, column, value):
    small_rows[4][column] = value
    with pytest.raises(RowError, match="row 6"):
        parse_match_csv(_to_text(small_rows), strict=False)


def test_tiebreak_scores_are_numeric(small_rows):
    first_game = [r for r in small_rows if r["game_no"] == "1"]
    for r in first_game:
        r["game_no"] = "13"
    first_game[0]["p1_score"] = "6"
    ds = parse_match_csv(_to_text(first_game), strict=False)
    assert ds[0].p1_score == "6" and ds[0].is_tiebreak
    small_rows[-1]["p1_score"] = "6"
    with pytest.raises(RowError):
        parse_match_csv(_to_text(small_rows[-1:]), strict=False)


def test_missing_shot_type_is_a_level(small_rows):
    small_rows[0]["winner_shot_type"] = ""
    small_rows[1]["winner_shot_type"] = "F"
    ds = parse_match_csv(_to_text(small_rows), strict=False)
    assert ds[0].winner_shot_type == "0"
    assert ds[1].winner_shot_type == "F"


def test_rows_sorted_within_match(small_rows):
    ds = parse_match_csv(_to_text(list(reversed(small_rows))), strict=False)
    keys = [r.key for r in ds]
    assert keys == sorted(keys)


def test_duplicate_point_key_rejected(small_rows):
    with pytest.raises(RowError):
        parse_match_csv(_to_text(small_rows + small_rows[:1]))


def test_strict_checks_cumulative_points(small_rows):
    small_rows[5]["p1_points_won"] = str(int(small_rows[5]["p1_points_won"]) + 7)
    with pytest.raises(RowError):
        parse_match_csv(_to_text(small_rows))
    parse_match_csv(_to_text(small_rows), strict=False)


def test_dataset_navigation(tournament):
    assert len(tournament.match_ids) == 4
    one = tournament.match("synthetic-1302")
    assert one.players() == ("Opponent 2", "Carlos Test")
    assert sum(len(m) for m in tournament.matches().values()) == len(tournament)
    assert len(tournament.filter(lambda r: r.set_no == 1)) <= len(tournament)
    assert tournament.column("server")[:3] == [r.server for r in tournament.records[:3]]


# -- features ----------------------------------------------------------------

def _with(ds, idx, **kw):
    recs = list(ds.records)
    for i in idx:
        recs[i] = dataclasses.replace(recs[i], **kw)
    return MatchDataset(tuple(recs))


def test_two_levels_make_one_indicator(small):
    ds = _with(small, range(6), serve_depth="CTL")
    ds = _with(ds, range(6, 12), serve_depth="NCTL")
    t = one_hot_encode(ds, ["serve_depth"])
    assert t.columns == ("serve_depth=NCTL",)
    assert t.column("serve_depth=NCTL").tolist() == [0.0] * 6 + [1.0] * 6


def test_single_level_makes_no_indicator(small):
    ds = _with(small, range(12), serve_depth="CTL")
    with pytest.warns(ConstantColumnWarning):
        t = one_hot_encode(ds, ["serve_depth"])
    assert t.columns == ()
    assert t.warnings


def test_five_levels_make_four_indicators(small):
    widths = ["B", "BC", "BW", "C", "W"]
    ds = small
    for i in range(12):
        ds = _with(ds, [i], serve_width=widths[i % 5])
    t = one_hot_encode(ds, ["serve_width"])
    assert t.columns == tuple(f"serve_width={w}" for w in widths[1:])
    assert np.all(t.values.sum(axis=1) <= 1)


def test_missing_values_masked(small):
    ds = _with(small, [2, 7], return_depth=None)
    t = build_features(ds, ["speed_mph", "return_depth", "p1_score"])
    n_missing = sum(1 for r in ds if r.speed_mph is None or r.return_depth is None)
    assert t.n_dropped == n_missing
    assert t.n_rows + t.n_dropped == len(ds)
    assert not t.mask[2] and not t.mask[7]
    assert t.provenance[-1] == "ordinal"


def test_levels_from_training_reused(small):
    ds = _with(small, range(12), serve_depth="CTL")
    t = build_features(ds, ["serve_depth"], levels={"serve_depth": ("CTL", "NCTL")})
    assert t.columns == ("serve_depth=NCTL",)
    assert t.values.sum() == 0


def test_ordinal_encoding(small):
    t = build_features(small, ["serve_width"], encoding="ordinal")
    lv = t.levels["serve_width"]
    expect = [float(lv.index(r.serve_width)) for r in small if r.serve_width is not None]
    assert t.column("serve_width").tolist() == expect


def test_feature_errors(small):
    with pytest.raises(UnknownColumnError):
        build_features(small, ["nonsense"])
    with pytest.raises(EncodingError):
        one_hot_encode(small, ["speed_mph"])
    with pytest.raises(UsageError):
        build_features(small, ["speed_mph"], encoding="binary")


# -- key games ---------------------------------------------------------------

def _game(n_points=4, **kw):
    base = simulate_match(n_points=n_points, seed=0)
    recs = [dataclasses.replace(r, p1_break_pt=0, p2_break_pt=0, p1_games=0, p2_games=0, game_no=1, **kw)
            for r in base]
    return recs


def test_break_point_includes_whole_game():
    recs = _game()
    recs[2] = dataclasses.replace(recs[2], p2_break_pt=1)
    other = [dataclasses.replace(r, game_no=2, p1_games=1) for r in _game()]
    ds = MatchDataset(tuple(recs + other))
    key = select_key_games(ds)
    assert [r.game_no for r in key] == [1, 1, 1, 1]


def test_late_game_included():
    recs = [dataclasses.replace(r, p1_games=5) for r in _game()]
    assert len(select_key_games(MatchDataset(tuple(recs)))) == 4


def test_vacuous_rule_gives_empty_subset():
    assert len(select_key_games(MatchDataset(tuple(_game())))) == 0


def test_rule_parsing():
    assert KeyGameRule.parse("break,games>=5") == KeyGameRule()
    assert KeyGameRule.parse("games>=3") == KeyGameRule(False, 3)
    assert str(KeyGameRule.parse("none")) == "none"
    with pytest.raises(UsageError):
        KeyGameRule.parse("tiebreaks")
