"""Command-line entry point: ``bcrec {stats,split,evaluate,predict,profiles}``.

Options may also come from a flat ``key = value`` file given with ``--config``;
keys are the long flag names without dashes (``train-folds``, ``jobs``, ...).
Precedence is flag > config file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import FoldSplit, ParseSummary, load_ratings, load_trust, split_folds
from .evaluation import ExperimentConfig, run_experiment
from .predict import Model, PredictorConfig
from .similarity import build_histograms, build_user_profiles

log = logging.getLogger("bcrec")

DEFAULTS = {
    "method": "b",
    "social": "on",
    "folds": 5,
    "seed": 42,
    "train-folds": "all",
    "test-fold": None,
    "limit": None,
    "jobs": 1,
    "rounding": "on",
    "include-scorer-trustee": "off",
    "backend": None,
    "output": None,
    "dump-predictions": None,
    "fold-file": None,
}
INT_KEYS = {"folds", "seed", "test-fold", "limit", "jobs"}


class CliError(Exception):
    pass


def _from_report(doc: dict) -> dict:
    """Config keys from the ``config`` block echoed into an evaluation report."""
    c = doc["config"]
    p = c["predictor"]
    tf = c["train_folds"]
    onoff = {True: "on", False: "off"}
    out = {
        "ratings": c.get("ratings"),
        "trust": c.get("trust"),
        "method": p["method"].lower(),
        "social": onoff[p["social"]],
        "rounding": onoff[p["rounding"]],
        "include-scorer-trustee": onoff[p["include_scorer_as_trustee"]],
        "folds": c["k"],
        "seed": c["seed"],
        "train-folds": ",".join(map(str, tf)) if isinstance(tf, list) else (tf or "all"),
        "jobs": c["jobs"],
        "limit": c["limit"],
        "backend": c["backend"],
    }
    if c.get("test_folds") and len(c["test_folds"]) == 1:
        out["test-fold"] = c["test_folds"][0]
    return {k: v for k, v in out.items() if v is not None}


def read_config_file(path) -> dict:
    """Read ``key = value`` lines, or the echoed config of a JSON report."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return _from_report(json.loads(text))
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("_", "-")] = v
    return out


def resolve(args: argparse.Namespace, keys) -> dict:
    """Merge flags over config-file values over defaults."""
    file_vals = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_vals) - set(DEFAULTS) - {"ratings", "trust"}
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for k in keys:
        v = getattr(args, k.replace("-", "_"), None)
        if v is None:
            v = file_vals.get(k, DEFAULTS.get(k))
        if k in INT_KEYS and v is not None:
            v = int(v)
        out[k] = v
    return out


def _on_off(v, name) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("on", "true", "1", "yes"):
        return True
    if str(v).lower() in ("off", "false", "0", "no"):
        return False
    raise CliError(f"--{name} expects on/off, got {v!r}")


def _parse_train_folds(v):
    if v is None or v == "all" or str(v).startswith("next:"):
        return v
    return tuple(int(x) for x in str(v).replace(" ", "").split(",") if x)


def predictor_config(c: dict) -> PredictorConfig:
    return PredictorConfig(
        method=str(c["method"]).upper(),
        social=_on_off(c["social"], "social"),
        rounding=_on_off(c["rounding"], "rounding"),
        include_scorer_as_trustee=_on_off(c["include-scorer-trustee"], "include-scorer-trustee"),
    )


def _need(c, key):
    if not c.get(key):
        raise CliError(f"--{key} is required")
    return c[key]


def _load_ratings(path):
    summary = ParseSummary()
    table = load_ratings(path, summary)
    if table.n_ratings == 0:
        raise CliError(f"{path}: empty dataset")
    return table, summary


def cmd_stats(args) -> int:
    c = resolve(args, ["ratings", "trust"])
    table, summary = _load_ratings(_need(c, "ratings"))
    print(f"users           {table.n_users}")
    print(f"items           {table.n_items}")
    print(f"ratings         {table.n_ratings}")
    print(f"sparsity        {table.sparsity:.6f}")
    if summary.duplicates or summary.rejected_out_of_range:
        print(f"duplicates      {summary.duplicates}")
        print(f"out-of-range    {summary.rejected_out_of_range}")
    if c.get("trust"):
        trust = load_trust(c["trust"])
        print(f"trust lines     {trust.n_lines}")
        print(f"trust edges     {trust.n_edges} (after dropping {trust.n_self_edges} self, "
              f"{trust.n_duplicates} duplicate)")
    return 0


def cmd_split(args) -> int:
    c = resolve(args, ["ratings", "folds", "seed", "output"])
    table, _ = _load_ratings(_need(c, "ratings"))
    try:
        split = split_folds(table, c["folds"], c["seed"])
    except ValueError as e:
        raise CliError(str(e)) from None
    out = _need(c, "output")
    with open(out, "w") as f:
        split.write(f)
    print(f"wrote {out}: fold sizes {split.sizes().tolist()}")
    return 0


def cmd_evaluate(args) -> int:
    keys = ["ratings", "trust", "method", "social", "folds", "seed", "train-folds", "test-fold", "limit",
            "jobs", "rounding", "include-scorer-trustee", "backend", "output", "dump-predictions", "fold-file"]
    c = resolve(args, keys)
    table, _ = _load_ratings(_need(c, "ratings"))
    trust = load_trust(_need(c, "trust"))
    cfg = ExperimentConfig(
        predictor=predictor_config(c),
        k=c["folds"],
        seed=c["seed"],
        train_folds=_parse_train_folds(c["train-folds"]),
        test_folds=(c["test-fold"],) if c["test-fold"] is not None else None,
        jobs=c["jobs"],
        limit=c["limit"],
        backend=c["backend"],
    )
    split = None
    if c["fold-file"]:
        with open(c["fold-file"]) as f:
            split = FoldSplit.read(f, k=cfg.k, seed=cfg.seed)
        if len(split.fold_of) != table.n_ratings:
            raise CliError(f"{c['fold-file']}: {len(split.fold_of)} records, ratings file has {table.n_ratings}")
    try:
        report = run_experiment(cfg, table, trust, split)
    except ValueError as e:
        raise CliError(str(e)) from None
    doc = report.to_dict()
    doc["config"]["ratings"] = str(c["ratings"])
    doc["config"]["trust"] = str(c["trust"])
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if c["output"]:
        Path(c["output"]).write_text(text)
    else:
        sys.stdout.write(text)
    if c["dump-predictions"]:
        with open(c["dump-predictions"], "w") as f:
            report.dump_predictions(f, table)
    print(report.summary(), file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    c = resolve(args, ["ratings", "trust", "method", "social", "rounding", "include-scorer-trustee"])
    table, _ = _load_ratings(_need(c, "ratings"))
    trust = load_trust(c["trust"]) if c.get("trust") else None
    model = Model.fit(table, trust)
    cfg = predictor_config(c)
    user, item = _id(args.user), _id(args.item)
    try:
        outcome = model.predict_ids(user, item, cfg)
    except KeyError:
        print(f"unknown user id {args.user}")
        return 1
    print(f"{cfg.label}: user {args.user} item {args.item}: {outcome}")
    return 0


def cmd_profiles(args) -> int:
    c = resolve(args, ["ratings", "output"])
    table, _ = _load_ratings(_need(c, "ratings"))
    profiles = build_user_profiles(table, build_histograms(table))
    out = _need(c, "output")
    profiles.save(out, table.user_ids)
    print(f"wrote {out}: {len(profiles)} user profiles")
    return 0


def _id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcrec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, trust=True):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--ratings", metavar="PATH")
        if trust:
            sp.add_argument("--trust", metavar="PATH")

    def predictor_flags(sp):
        sp.add_argument("--method", choices=["a", "b", "A", "B"])
        sp.add_argument("--social", choices=["on", "off"])
        sp.add_argument("--rounding", choices=["on", "off"])
        sp.add_argument("--include-scorer-trustee", choices=["on", "off"],
                        help="count a trustee who is also the scorer in the trust aggregate")

    sp = sub.add_parser("stats", help="dataset counts and sparsity")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("split", help="write a seeded fold assignment")
    common(sp, trust=False)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output", metavar="PATH")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("evaluate", help="k-fold MAE/RMSE/coverage")
    common(sp)
    predictor_flags(sp)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--train-folds", metavar="LIST", help="'all', 'next:N', or comma-separated fold ids")
    sp.add_argument("--test-fold", type=int)
    sp.add_argument("--fold-file", metavar="PATH", help="fold assignment written by 'bcrec split'")
    sp.add_argument("--limit", type=int, help="cap on test records across all folds")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--backend", choices=["numba", "numpy"])
    sp.add_argument("--output", metavar="PATH")
    sp.add_argument("--dump-predictions", metavar="PATH")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("predict", help="predict one rating from the full ratings file")
    common(sp)
    predictor_flags(sp)
    sp.add_argument("--user", required=True)
    sp.add_argument("--item", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("profiles", help="write a user-profile snapshot (.npz)")
    common(sp, trust=False)
    sp.add_argument("--output", metavar="PATH")
    sp.set_defaults(func=cmd_profiles)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose + 1, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as e:
        print(f"bcrec: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
