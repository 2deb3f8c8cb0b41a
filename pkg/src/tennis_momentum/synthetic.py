"""Synthetic point-by-point matches that satisfy every invariant of the input format.

Used for fixtures and demos when the real tournament file is not at hand.
Scores follow the real scoring rules (deuce/advantage, 7-point tie-break at
6-6, best of five sets); serve statistics and event flags are random.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ingest import NO_SHOT, SCORE_TOKENS, MatchDataset, PointRecord

WIDTHS = ("B", "BC", "BW", "C", "W")
_WIDTH_P = (0.08, 0.1, 0.12, 0.35, 0.35)


@dataclass(frozen=True)
class PointContext:
    """Pre-point state handed to a custom point law."""

    server: int
    serve_no: int
    speed_mph: float | None
    serve_width: str
    serve_depth: str
    sets: tuple[int, int]
    games: tuple[int, int]
    points_won: tuple[int, int]


PointLaw = Callable[[PointContext], float]  # returns P(player 1 wins the point)


def _logit(p: float) -> float:
    return math.log(p / (1 - p))


def default_law(p_serve: float = 0.64) -> PointLaw:
    base = _logit(p_serve)

    def law(ctx: PointContext) -> float:
        z = base
        if ctx.speed_mph is not None:
            z += 0.04 * (ctx.speed_mph - 110.0)
        z += 0.35 if ctx.serve_depth == "CTL" else -0.1
        z += 0.2 if ctx.serve_width in ("W", "C") else -0.2
        p_server = 1.0 / (1.0 + math.exp(-z))
        return p_server if ctx.server == 1 else 1.0 - p_server

    return law


def _tokens(a: int, b: int, tiebreak: bool) -> tuple[str, str]:
    if tiebreak:
        return str(a), str(b)
    if a >= 3 and b >= 3:
        if a == b:
            return "40", "40"
        return ("AD", "40") if a > b else ("40", "AD")
    return SCORE_TOKENS[min(a, 3)], SCORE_TOKENS[min(b, 3)]


def simulate_match(
    match_id: str = "synthetic-0001",
    player1: str = "Player One",
    player2: str = "Player Two",
    n_points: int | None = 300,
    seed: int = 0,
    law: PointLaw | None = None,
    events: bool = True,
    p_serve: float = 0.64,
) -> MatchDataset:
    """Simulate up to ``n_points`` points (or a full best-of-five match).

    ``law`` decides who wins each point; by default serve speed, depth and
    width shift the server's odds. With ``events=False`` every per-point
    outcome flag (aces, winners, errors, net points, break points won/missed)
    is zero, so the label can only be learned from serve statistics and state.
    """
    rng = np.random.default_rng(seed)
    law = law or default_law(p_serve)
    sets, games, pts, won = [0, 0], [0, 0], [0, 0], [0, 0]
    set_no = game_no = point_no = 1
    server = 1
    tb_first_server = 1
    t = 0
    records: list[PointRecord] = []
    limit = n_points if n_points is not None else 10**6

    while len(records) < limit:
        tiebreak = games == [6, 6]
        if tiebreak:
            k = pts[0] + pts[1]
            server = tb_first_server if ((k + 1) // 2) % 2 == 0 else 3 - tb_first_server
        receiver = 3 - server
        s1, s2 = _tokens(pts[0], pts[1], tiebreak)

        serve_no = 1 if rng.random() < 0.65 else 2
        speed = float(round(rng.normal(118.0, 7.0) if serve_no == 1 else rng.normal(96.0, 6.0)))
        speed_val = None if rng.random() < 0.02 else max(speed, 60.0)
        width = str(rng.choice(WIDTHS, p=_WIDTH_P))
        depth = "CTL" if rng.random() < (0.45 if serve_no == 1 else 0.3) else "NCTL"

        ctx = PointContext(server, serve_no, speed_val, width, depth, tuple(sets), tuple(games), tuple(won))
        victor = 1 if rng.random() < law(ctx) else 2
        loser = 3 - victor

        flags = {f"p{k}_{n}": 0 for k in (1, 2) for n in (
            "ace", "winner", "double_fault", "unf_err", "net_pt", "net_pt_won",
            "break_pt", "break_pt_won", "break_pt_missed")}
        pr, ps = pts[receiver - 1], pts[server - 1]
        break_pt = (not tiebreak) and pr >= 3 and pr > ps
        if break_pt:
            flags[f"p{receiver}_break_pt"] = 1
        shot = NO_SHOT
        rally = int(2 + rng.geometric(0.25))
        ret_depth = "D" if rng.random() < 0.5 else "ND"
        if events:
            if break_pt:
                flags[f"p{receiver}_break_pt_{'won' if victor == receiver else 'missed'}"] = 1
            if victor == server and rng.random() < 0.10:
                flags[f"p{server}_ace"] = 1
                rally, ret_depth = 1, None
            elif victor == receiver and serve_no == 2 and rng.random() < 0.2:
                flags[f"p{server}_double_fault"] = 1
                rally, ret_depth = 1, None
            else:
                if rng.random() < 0.3:
                    flags[f"p{victor}_winner"] = 1
                    shot = "F" if rng.random() < 0.6 else "B"
                elif rng.random() < 0.5:
                    flags[f"p{loser}_unf_err"] = 1
                for k in (1, 2):
                    if rng.random() < 0.12:
                        flags[f"p{k}_net_pt"] = 1
                        flags[f"p{k}_net_pt_won"] = int(victor == k)
        dist = [max(0.0, round(rally * 3.2 + rng.normal(0.0, 2.0), 3)) for _ in (1, 2)]

        pts[victor - 1] += 1
        won[victor - 1] += 1
        target = 7 if tiebreak else 4
        game_victor = set_victor = 0
        if pts[victor - 1] >= target and pts[victor - 1] - pts[loser - 1] >= 2:
            game_victor = victor

        records.append(PointRecord(
            match_id=match_id, player1=player1, player2=player2, elapsed_time=t,
            set_no=set_no, game_no=game_no, point_no=point_no,
            p1_sets=sets[0], p2_sets=sets[1], p1_games=games[0], p2_games=games[1],
            p1_score=s1, p2_score=s2, server=server, serve_no=serve_no, point_victor=victor,
            p1_points_won=won[0], p2_points_won=won[1],
            game_victor=game_victor, set_victor=0,
            winner_shot_type=shot, p1_distance_run=dist[0], p2_distance_run=dist[1],
            rally_count=rally, speed_mph=speed_val, serve_width=width, serve_depth=depth,
            return_depth=ret_depth, **flags,
        ))
        t += 20 + 4 * rally
        point_no += 1

        if game_victor:
            games[victor - 1] += 1
            pts = [0, 0]
            point_no = 1
            game_no += 1
            t += 45
            if tiebreak:
                server = 3 - tb_first_server
            else:
                server = 3 - server
            g, h = games[victor - 1], games[loser - 1]
            if (g >= 6 and g - h >= 2) or g == 7:
                set_victor = victor
                sets[victor - 1] += 1
                games = [0, 0]
                set_no += 1
                game_no = 1
                t += 120
                last = records[-1]
                records[-1] = PointRecord(**{**_asdict(last), "set_victor": set_victor})
                if sets[victor - 1] == 3:
                    break
            if games == [6, 6]:
                tb_first_server = server
    return MatchDataset(tuple(records))


def _asdict(rec: PointRecord) -> dict:
    return {name: getattr(rec, name) for name in PointRecord.__dataclass_fields__}


def simulate_tournament(player: str = "Player One", n_matches: int = 4, n_points: int | None = 300,
                        seed: int = 0, **kwargs) -> MatchDataset:
    """Several matches featuring ``player``, alternating between the player1 and player2 slots."""
    records: list[PointRecord] = []
    for i in range(n_matches):
        opponent = f"Opponent {i + 1}"
        p1, p2 = (player, opponent) if i % 2 == 0 else (opponent, player)
        m = simulate_match(f"synthetic-{1301 + i}", p1, p2, n_points=n_points, seed=seed + i, **kwargs)
        records.extend(m.records)
    return MatchDataset(tuple(records))
