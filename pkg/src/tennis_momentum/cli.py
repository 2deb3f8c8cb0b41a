"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import MomentumError, UsageError
from .ingest import KeyGameRule
from .logreg import TrainConfig
from .pipeline import FORMATS, STUDIES, RunConfig, StudyReport

log = logging.getLogger("tennis_momentum")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _formats(text: str) -> tuple[str, ...]:
    fmts = _names(text)
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {','.join(FORMATS)}")
    return fmts


def _key_rule(text: str) -> KeyGameRule:
    try:
        return KeyGameRule.parse(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' lines supplying any flag")
    common.add_argument("--input", action="append", dest="input", metavar="CSV",
                        help="point-by-point CSV file (repeatable)")
    common.add_argument("--match", help="match id, e.g. 2023-wimbledon-1701")
    common.add_argument("--player", help="1, 2 or a player's name")
    common.add_argument("--out", help="output directory (nothing is written without it)")
    common.add_argument("--format", type=_formats, default=FORMATS, help="comma list of csv,json,svg")

    fitting = _Parser(add_help=False)
    fitting.add_argument("--alpha", type=float, default=TrainConfig.alpha, help="learning rate")
    fitting.add_argument("--max-iter", type=int, default=TrainConfig.max_iter)
    fitting.add_argument("--tol", type=float, default=TrainConfig.tol, help="stop when |loss change| < tol")
    fitting.add_argument("--cutoff", type=float, default=TrainConfig.cutoff)
    fitting.add_argument("--encoding", choices=("onehot", "ordinal"), default="onehot",
                         help="categorical encoding of serve/return columns")

    parser = _Parser(prog="tennis-momentum", description="Momentum analysis of point-by-point tennis data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("momentum", parents=[common], help="TOPSIS momentum series and charts")
    p.add_argument("--weights", type=_floats, default=(0.4, 0.25, 0.2, 0.15),
                   help="sets,games,points,serving weights (sum to 1)")
    p.add_argument("--raw", action="store_true", help="chart cumulative points instead of closeness")

    p = sub.add_parser("randomness", parents=[common, fitting], help="logistic test of point outcomes")
    p.add_argument("--set", type=int, default=1, dest="set_no", help="set number (0 for all sets)")
    p.add_argument("--threshold", type=float, default=70.0, help="accuracy percent above which runs are non-random")
    p.add_argument("--holdout", type=float, default=0.0, help="fraction of trailing points held out for scoring")

    p = sub.add_parser("swing", parents=[common, fitting], help="key-game swing prediction across matches")
    p.add_argument("--train", type=_names, help="comma list of training match ids")
    p.add_argument("--test", help="test match id")
    p.add_argument("--key-rule", type=_key_rule, default=KeyGameRule(), help="e.g. 'break,games>=5'")

    p = sub.add_parser("factors", parents=[common], help="Spearman screening and PCA of indicators")
    p.add_argument("--set", type=int, default=0, dest="set_no", help="set number (0 for all sets)")
    p.add_argument("--p-threshold", type=float, default=0.05)
    p.add_argument("--top-k", type=int, default=3)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Turn config-file entries into defaults of the chosen subcommand."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    command = next((t for t in argv if t in STUDIES), None)
    if command is None:
        return
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    actions = {a.dest: a for a in sub._actions}
    aliases = {"set": "set_no"}
    defaults = {}
    for key, value in read_config_file(path).items():
        dest = aliases.get(key, key)
        if dest not in actions or dest in ("help", "config"):
            raise UsageError(f"{path}: '{key}' is not an option of '{command}'")
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
        elif dest == "input":
            defaults[dest] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            try:
                defaults[dest] = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}: bad value for '{key}': {exc}") from None
            if action.choices and defaults[dest] not in action.choices:
                raise UsageError(f"{path}: '{key}' must be one of {list(action.choices)}")
    sub.set_defaults(**defaults)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    train = TrainConfig()
    if hasattr(args, "alpha"):
        train = TrainConfig(args.alpha, args.max_iter, args.tol, args.cutoff)
    kwargs = dict(
        inputs=tuple(args.input or ()),
        match=args.match,
        player=args.player,
        out_dir=args.out,
        formats=tuple(args.format),
        train=train,
    )
    if args.command == "momentum":
        kwargs.update(weights=tuple(args.weights), raw_chart=args.raw)
    if args.command in ("randomness", "swing"):
        kwargs["encoding"] = args.encoding
    if args.command in ("randomness", "factors"):
        kwargs["set_no"] = args.set_no or None
    if args.command == "randomness":
        kwargs.update(nonrandom_threshold=args.threshold, holdout=args.holdout)
    if args.command == "swing":
        kwargs.update(train_matches=tuple(args.train or ()), test_match=args.test, key_rule=args.key_rule)
    if args.command == "factors":
        kwargs.update(p_threshold=args.p_threshold, top_k=args.top_k)
    return RunConfig(**kwargs)


def _summary(report: StudyReport) -> str:
    p = report.payload
    if report.study == "momentum":
        return (f"momentum {p['match_id']}: {p['n_points']} points, mean closeness "
                f"{p['mean_closeness'][0]:.3f} / {p['mean_closeness'][1]:.3f}, "
                f"{p['lead_changes']} lead changes")
    if report.study == "randomness":
        return (f"randomness {p['match_id']} player {p['player']} ({p['player_name']}): "
                f"{p['confusion']['overall_percent']}% correct -> {p['verdict']}")
    if report.study == "swing":
        return (f"swing test {p['test_match']}: per-phase accuracy {p['phase_accuracy']:.1f}% "
                f"on {p['phase_rows_evaluated']} rows, pooled {p['pooled']['confusion']['overall_percent']}%")
    names = ", ".join(f["name"] for f in p["top_factors"])
    return f"factors: {len(p['selected'])} variables kept at p < {p['p_threshold']}; top: {names}"


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        config = config_from_args(args)
        report = STUDIES[args.command](config)
    except MomentumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(_summary(report))
    for f in report.files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
