"""Command line interface: ``pasv {value,sweep,sample,enumerate,limit-check}``.

Exit codes: 0 success, 1 failed limit check, 2 configuration error,
3 utility failure, 4 linear-extension count above ``--cap``.
"""

from __future__ import annotations

import argparse
import json
import re
import shlex
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from ._errors import (
    ExtensionCountExceedsCap,
    MissingSubset,
    PasvError,
    ProcessFailure,
    ProtocolViolation,
    UtilityTimeout,
)
from ._rng import derive_seed
from .order_model import exact_pasv_distribution
from .poset import DEFAULT_CAP, detect_ordered_partition
from .sampler import MhConfig, default_mh_config, exact_sample, mh_sample
from .sweep import (
    DEFAULT_GRID,
    LIMIT_LADDER,
    SweepSpec,
    estimate_values,
    limit_mismatch_demo,
    limit_reference,
    limit_tv_ladder,
    run_sweep,
)
from .utility import ElementaryGame, ExternalUtility, KNNImputationUtility, cached
from .valuation import group_values, marginal_by_position

EXIT_CONFIG, EXIT_UTILITY, EXIT_CAP, EXIT_CHECK = 2, 3, 4, 1
UTILITY_ERRORS = (ProcessFailure, ProtocolViolation, UtilityTimeout, MissingSubset)

# Config-file keys; flags override these, which override the defaults.
DEFAULTS = {
    "dag": None,
    "weights": None,
    "utility": None,
    "estimator": "auto",
    "cap": DEFAULT_CAP,
    "n_mc": None,
    "burn_in": None,
    "thinning": None,
    "seed": 0,
    "groups": None,
    "output": None,
    "format": None,
}


class ConfigError(Exception):
    pass


def _common(parser: argparse.ArgumentParser, utility: bool = True) -> None:
    parser.add_argument("--config", help="JSON file with default values for the flags below")
    parser.add_argument("--dag", help="DAG file (JSON)")
    parser.add_argument("--weights", help="weights file (JSON); default all ones")
    if utility:
        parser.add_argument(
            "--utility",
            help="table:FILE.csv | elementary:LABEL,LABEL | lineage:FILE.json | "
            "external:'CMD ARGS' | knn:FILE.json",
        )
        parser.add_argument("--groups", help="grouping file (JSON label -> group)")
    parser.add_argument("--estimator", choices=["auto", "exact", "mh"],
                        help="exact enumeration, Metropolis-Hastings, or auto (exact when "
                        "the extension count is within --cap)")
    parser.add_argument("--cap", type=int, help=f"max linear extensions to enumerate (default {DEFAULT_CAP})")
    parser.add_argument("--n-mc", type=int, dest="n_mc", help="number of recorded MH samples")
    parser.add_argument("--burn-in", type=int, dest="burn_in", help="MH burn-in steps")
    parser.add_argument("--thinning", type=int, help="MH steps between recorded samples")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--output", "-o", help="output file; format from extension (.csv/.json)")
    parser.add_argument("--format", choices=["csv", "json"], help="override output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pasv", description="Priority-aware Shapley values.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("value", help="compute values for every player")
    _common(p)
    p.add_argument("--group-output", help="also write group totals to this file")
    p.add_argument("--curve-output", help="write mean marginal gain by entry position (CSV)")

    p = sub.add_parser("sweep", help="priority sweeping of one player or group")
    _common(p)
    p.add_argument("--target", required=True, help="comma-separated player labels swept together")
    p.add_argument("--grid", help="comma list (e.g. 0.5,1,2^3) or power range 2^-4..2^4; "
                   "default 2^-8..2^8")
    p.add_argument("--limit-reference", choices=["maximal", "refine"],
                   help="append extreme-weight reference rows (reference=true)")

    p = sub.add_parser("sample", help="write MH samples as JSON lines")
    _common(p, utility=False)
    p.add_argument("--count", type=int, help="number of samples (same as --n-mc)")

    p = sub.add_parser("enumerate", help="count linear extensions")
    _common(p, utility=False)
    p.add_argument("--list", action="store_true", help="print every extension and its probability")

    p = sub.add_parser("limit-check", help="TV distance of extreme weights vs modified DAGs")
    _common(p, utility=False)
    p.add_argument("--mode", required=True, help="maximal | refine | edges")
    p.add_argument("--target", required=True, help="player label (refine: comma-separated subset)")
    p.add_argument("--candidate-edge", action="append", default=[],
                   help="edges mode: FROM,TO (repeatable)")
    return parser


def _settings(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("cap", "n_mc", "burn_in", "thinning"):
        if cfg[key] is not None and int(cfg[key]) < (0 if key == "burn_in" else 1):
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")
    if cfg["seed"] is not None and int(cfg["seed"]) < 0:
        raise ConfigError("--seed must be non-negative")
    if not cfg["dag"]:
        raise ConfigError("--dag is required")
    return cfg


def _require_file(path: str, what: str) -> str:
    if not Path(path).is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_dag(cfg):
    return pio.load_dag(_require_file(cfg["dag"], "DAG file"))


def _load_weights(cfg, dag):
    if cfg["weights"] is None:
        return np.ones(len(dag.labels))
    return pio.load_weights(_require_file(cfg["weights"], "weights file"), dag)


def _labels_arg(text: str, dag) -> list[int]:
    return [dag.resolve(t.strip()) for t in text.split(",") if t.strip()]


def _load_utility(spec: str | None, dag):
    if not spec or ":" not in spec:
        raise ConfigError("--utility must look like KIND:ARG")
    kind, arg = spec.split(":", 1)
    n = len(dag.labels)
    if kind == "table":
        return pio.load_table_utility(_require_file(arg, "utility table"), n)
    if kind == "elementary":
        arg = arg.strip().strip("{}")
        return ElementaryGame(_labels_arg(arg, dag), n_players=n)
    if kind == "lineage":
        return pio.load_lineage(_require_file(arg, "lineage file"), dag)
    if kind == "external":
        cmd = shlex.split(arg)
        if not cmd:
            raise ConfigError("external utility needs a command")
        return ExternalUtility(cmd, n_players=n)
    if kind == "knn":
        conf = json.loads(Path(_require_file(arg, "knn config")).read_text(encoding="utf-8"))
        root = Path(arg).parent
        try:
            train = pio.load_dataset(_require_file(str(root / conf["train"]), "train data"), conf["label"])
            evals = pio.load_dataset(_require_file(str(root / conf["eval"]), "eval data"), conf["label"])
            pred = pio.load_predictor(_require_file(str(root / conf["predictor"]), "predictor"))
        except KeyError as exc:
            raise ConfigError(f"knn config missing key {exc}") from None
        u = KNNImputationUtility(train, evals, pred, int(conf.get("k", 100)),
                                 int(conf.get("n_eval", 1000)), int(conf.get("seed", 0)))
        if u.n_players != n:
            raise ConfigError(f"dataset has {u.n_players} features but the DAG has {n} players")
        return u
    raise ConfigError(f"unknown utility kind {kind!r}")


def _mh(cfg, n, seed) -> MhConfig:
    base = default_mh_config(n)
    return MhConfig(
        n_mc=cfg["n_mc"] or base.n_mc,
        burn_in=base.burn_in if cfg["burn_in"] is None else cfg["burn_in"],
        thinning=cfg["thinning"] or base.thinning,
        seed=seed,
    )


def _format(cfg, output) -> str:
    if cfg["format"]:
        return cfg["format"]
    if output and output.endswith(".json"):
        return "json"
    return "csv"


def _emit(text: str, output: str | None) -> None:
    if output:
        pio.atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _parse_grid(text: str | None) -> list[float]:
    if text is None:
        return list(DEFAULT_GRID)
    m = re.fullmatch(r"\s*([0-9.]+)\^(-?\d+)\.\.([0-9.]+)\^(-?\d+)\s*", text)
    if m:
        b1, k1, b2, k2 = float(m[1]), int(m[2]), float(m[3]), int(m[4])
        if b1 != b2 or k1 > k2:
            raise ConfigError(f"bad grid range {text!r}")
        return [b1**k for k in range(k1, k2 + 1)]
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            if "^" in item:
                b, k = item.split("^")
                out.append(float(b) ** float(k))
            else:
                out.append(float(item))
        except ValueError:
            raise ConfigError(f"bad grid value {item!r}") from None
    return out


def cmd_value(args, cfg) -> int:
    dag = _load_dag(cfg)
    w = _load_weights(cfg, dag)
    u = cached(_load_utility(cfg["utility"], dag))
    groups = pio.load_groups(_require_file(cfg["groups"], "grouping file"), dag) if cfg["groups"] else None
    seed = int(cfg["seed"])
    p = dag.poset
    mh = _mh(cfg, p.n, derive_seed(seed, "value"))
    report, method = estimate_values(p, w, u, cfg["estimator"], int(cfg["cap"]), mh)
    grouped = group_values(report, groups) if groups is not None else None
    out = cfg["output"]
    if _format(cfg, out) == "json":
        text = pio.report_to_json(report, dag.labels, grouped)
    else:
        text = pio.report_to_csv(report, dag.labels)
    curve_text = None
    if args.curve_output:
        if method == "mh":
            samples, _ = mh_sample(p, w, mh)
        else:
            d = exact_pasv_distribution(p, w, int(cfg["cap"]))
            samples = exact_sample(d, mh.n_mc, derive_seed(seed, "curve"))
        label_groups = {i: (groups[i] if groups else dag.labels[i]) for i in range(p.n)}
        curve_text = pio.curve_to_csv(marginal_by_position(samples, u, label_groups))
    _emit(text, out)
    if grouped is not None and args.group_output:
        pio.atomic_write(args.group_output, pio.groups_to_csv(grouped, report.n_samples))
    if curve_text is not None:
        pio.atomic_write(args.curve_output, curve_text)
    print(
        f"efficiency check: sum(values)={report.value_sum!r} "
        f"U(all)-U(empty)={report.total_utility!r} gap={report.efficiency_gap:.3g} "
        f"method={method}",
        file=sys.stderr,
    )
    return 0


def cmd_sweep(args, cfg) -> int:
    dag = _load_dag(cfg)
    w = _load_weights(cfg, dag)
    u = cached(_load_utility(cfg["utility"], dag))
    p = dag.poset
    target = _labels_arg(args.target, dag)
    if not target:
        raise ConfigError("--target needs at least one label")
    seed = int(cfg["seed"])
    spec = SweepSpec(
        target=target,
        grid=_parse_grid(args.grid),
        baseline=w,
        method=cfg["estimator"],
        cap=int(cfg["cap"]),
        mh=_mh(cfg, p.n, seed),
        seed=derive_seed(seed, "sweep"),
    )
    sweep = run_sweep(p, spec, u)
    reference = None
    if args.limit_reference == "maximal":
        if len(target) != 1:
            raise ConfigError("--limit-reference maximal needs a single target")
        reference = limit_reference(p, w, target[0], u, "maximal", spec.cap, spec.mh)
    elif args.limit_reference == "refine":
        op = detect_ordered_partition(p)
        if op is None:
            raise ConfigError("--limit-reference refine needs an ordered-partition DAG")
        reference = limit_reference(p, w, (op.layer_of(target[0]), target), u, "refine",
                                    spec.cap, spec.mh)
    reports, labels = sweep.reports, dag.labels
    if cfg["groups"]:
        groups = pio.load_groups(_require_file(cfg["groups"], "grouping file"), dag)
        reports = [_group_report(r, groups) for r in reports]
        reference = _group_report(reference, groups) if reference is not None else None
        labels = list(dict.fromkeys(groups[i] for i in range(p.n)))
    out = cfg["output"]
    if _format(cfg, out) == "json":
        text = pio.sweep_to_json(sweep.grid, reports, labels, reference)
    else:
        text = pio.sweep_to_csv(sweep.grid, reports, labels, reference)
    _emit(text, out)
    return 0


class _Grouped:
    def __init__(self, values, std_errors):
        self.values = values
        self.std_errors = std_errors


def _group_report(report, groups):
    g = group_values(report, groups)
    return _Grouped([v for v, _ in g.values()], [se for _, se in g.values()])


def cmd_sample(args, cfg) -> int:
    dag = _load_dag(cfg)
    w = _load_weights(cfg, dag)
    if args.count is not None:
        cfg["n_mc"] = args.count
    mh = _mh(cfg, dag.poset.n, derive_seed(int(cfg["seed"]), "sample"))
    samples, stats = mh_sample(dag.poset, w, mh)
    _emit(pio.samples_to_jsonl(samples, dag.labels), cfg["output"])
    print(f"steps={stats.steps_total} proposals={stats.proposals} "
          f"acceptance_rate={stats.acceptance_rate:.4f}", file=sys.stderr)
    return 0


def cmd_enumerate(args, cfg) -> int:
    dag = _load_dag(cfg)
    w = _load_weights(cfg, dag)
    d = exact_pasv_distribution(dag.poset, w, int(cfg["cap"]))
    lines = [f"count {len(d)}"]
    if args.list:
        for s, pr in zip(d.support, d.prob):
            lines.append(json.dumps([dag.labels[i] for i in s]) + f"\t{float(pr)!r}")
        lines.append(f"total {float(np.sum(d.prob))!r}")
    _emit("\n".join(lines) + "\n", cfg["output"])
    return 0


def cmd_limit_check(args, cfg) -> int:
    dag = _load_dag(cfg)
    w = _load_weights(cfg, dag)
    p, cap = dag.poset, int(cfg["cap"])
    target = _labels_arg(args.target, dag)
    if args.mode == "maximal":
        if len(target) != 1:
            raise ConfigError("maximal mode needs a single target")
        tvs = limit_tv_ladder(p, w, target[0], "maximal", LIMIT_LADDER, cap)
    elif args.mode == "refine":
        op = detect_ordered_partition(p)
        if op is None:
            raise ConfigError("refine mode needs an ordered-partition DAG")
        tvs = limit_tv_ladder(p, w, (op.layer_of(target[0]), target), "refine", LIMIT_LADDER, cap)
    elif args.mode == "edges":
        if len(target) != 1 or not args.candidate_edge:
            raise ConfigError("edges mode needs one target and at least one --candidate-edge")
        edges = []
        for e in args.candidate_edge:
            ends = _labels_arg(e, dag)
            if len(ends) != 2:
                raise ConfigError(f"bad edge {e!r}; expected FROM,TO")
            edges.append(tuple(ends))
        tvs = [limit_mismatch_demo(p, w, target[0], edges, big, cap) for big in LIMIT_LADDER]
        final = limit_mismatch_demo(p, w, target[0], edges, 1e8, cap)
        lines = [f"lambda={big:.0e} tv={tv!r}" for big, tv in zip(LIMIT_LADDER, tvs)]
        if final > 0.01:
            verdict = "non-equivalent"
        elif final < 1e-4:
            verdict = "equivalent"
        else:
            verdict = "inconclusive"
        lines.append(f"lambda=1e+08 tv={final!r} verdict={verdict}")
        _emit("\n".join(lines) + "\n", cfg["output"])
        return 0
    else:
        raise ConfigError(f"unknown mode {args.mode!r}; use maximal, refine or edges")
    ok = all(a > b for a, b in zip(tvs, tvs[1:])) and tvs[-1] < 1e-4
    lines = [f"lambda={big:.0e} tv={tv!r}" for big, tv in zip(LIMIT_LADDER, tvs)]
    lines.append("verdict=" + ("converges" if ok else "fails"))
    _emit("\n".join(lines) + "\n", cfg["output"])
    return 0 if ok else EXIT_CHECK


COMMANDS = {
    "value": cmd_value,
    "sweep": cmd_sweep,
    "sample": cmd_sample,
    "enumerate": cmd_enumerate,
    "limit-check": cmd_limit_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        return COMMANDS[args.command](args, cfg)
    except ExtensionCountExceedsCap as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UTILITY_ERRORS as exc:
        print(f"utility error: {exc}", file=sys.stderr)
        return EXIT_UTILITY
    except PasvError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, pio.FormatError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
