"""Command-line entry point: ``hyperblocks <command> [options]``.

Commands: train, simplify, classify, cv, grid, render, inspect.  Options
can also come from a TOML file (``--config``); flags override it.

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 bad data or
model document, 5 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .classify import HBClassifier
from .dataset import bundled_path, load_csv, load_points, normalize, normalize_with
from .errors import ConfigError, DataError, HyperblockError, InputIOError, ModelFormatError
from .evaluation import fold_table_csv, grid_search, render_report, run_cv, stats_csv
from .fallback import FallbackConfig
from .generation import GenerationConfig, generate
from .hyperblock import clause_count, deserialize, serialize, to_rule_text
from .simplify import SimplifyConfig, simplify_pipeline
from .viz import RenderSpec, render_parallel_coordinates

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_USAGE, EXIT_IO, EXIT_DATA, EXIT_INTERNAL = 2, 3, 4, 5

DEFAULTS = {
    "label_column": "-1",
    "no_header": False,
    "removal_threshold": 1,
    "attribute_order": "fisher",
    "max_disjunctions": 1,
    "stages": "r2a,r2b,disjunctive",
    "fallback": "ets",
    "k": 5,
    "threshold_fraction": 0.25,
    "thresholds": None,
    "metric": "manhattan",
    "folds": 10,
    "workers": 1,
    "tie_break": "lowest-attribute",
    "queue_policy": "coverage-ascending",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- option plumbing --------------------------------------------------------------

def _add_data(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--data", metavar="CSV", help="delimited data file")
    g.add_argument("--dataset", choices=["iris", "wbc", "mnist-2v7"], help="bundled dataset")
    p.add_argument("--label-column", help="label column index or name (default: last)")
    p.add_argument("--no-header", action="store_const", const=True, default=None,
                   help="the file has no header row")


def _add_simplify(p):
    p.add_argument("--removal-threshold", type=int, help="R2B minimum block size (default 1)")
    p.add_argument("--attribute-order", help="fisher, natural, or comma-separated indices")
    p.add_argument("--max-disjunctions", type=int, help="attributes allowed to differ in a disjunctive merge")
    p.add_argument("--stages", help="comma-separated subset/order of r2a,r2b,disjunctive")


def _add_fallback(p):
    p.add_argument("--fallback", choices=["ets", "nearest-hb", "knn-hb", "knn-euclidean", "none"])
    p.add_argument("--k", type=int, help="neighbours for k-NN fallbacks (default 5)")
    p.add_argument("--threshold-fraction", type=float, help="ETS threshold as a fraction of std (default 0.25)")
    p.add_argument("--thresholds", help="explicit comma-separated ETS thresholds")
    p.add_argument("--metric", choices=["manhattan", "euclidean"], help="block distance metric")


def _add_common(p):
    p.add_argument("--config", metavar="TOML", help="config file; command-line flags take precedence")
    p.add_argument("--workers", type=int, help="threads for purity scans (speed only)")


class Options:
    """Flag values layered over config-file values over defaults."""

    def __init__(self, args):
        self.args = args
        self.file = {}
        if getattr(args, "config", None):
            try:
                with open(args.config, "rb") as fh:
                    self.file = tomllib.load(fh)
            except OSError as exc:
                raise InputIOError(f"cannot read config {args.config}: {exc.strerror}") from exc
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config {args.config}: {exc}") from exc
            unknown = set(self.file) - set(DEFAULTS) - {"folds", "seed", "dataset", "data"}
            if unknown:
                raise ConfigError(f"config {args.config}: unknown key(s) {', '.join(sorted(unknown))}")

    def __getattr__(self, key):
        v = getattr(self.args, key, None)
        if v is not None:
            return v
        if key in self.file:
            return self.file[key]
        return DEFAULTS.get(key)


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _gen_cfg(o: Options) -> GenerationConfig:
    return GenerationConfig(o.tie_break, o.queue_policy, int(o.workers))


def _simp_cfg(o: Options) -> SimplifyConfig:
    order = o.attribute_order
    if not (isinstance(order, str) and order in ("fisher", "natural")):
        try:
            order = tuple(_int_list(order))
        except ValueError:
            raise ConfigError(f"attribute order {order!r} is not a policy name or index list") from None
    stages = o.stages
    stages = tuple(s.strip() for s in stages.split(",")) if isinstance(stages, str) else tuple(stages)
    return SimplifyConfig(int(o.removal_threshold), order, int(o.max_disjunctions), stages)


def _fb_cfg(o: Options) -> FallbackConfig:
    th = o.thresholds
    if isinstance(th, str):
        try:
            th = tuple(float(v) for v in th.split(","))
        except ValueError:
            raise ConfigError(f"bad thresholds {th!r}") from None
    method = None if o.fallback == "none" else o.fallback
    return FallbackConfig(method, int(o.k), float(o.threshold_fraction), th, o.metric)


def _load_raw(o: Options):
    path = o.data
    if path is None:
        name = o.dataset
        if name is None:
            raise ConfigError("no dataset given (use --data or --dataset)")
        path = bundled_path(name)
    return load_csv(path, has_header=not o.no_header, label_column=o.label_column)


def _read_model(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read model {path}: {exc.strerror}") from exc
    return deserialize(text)


def _write(path, text: str):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputIOError(f"cannot write {path}: {exc.strerror}") from exc


def _summary(model) -> str:
    lines = [f"blocks: {len(model.blocks)}  clauses: {model.total_clauses()}"]
    for name, n in zip(model.class_names, model.class_hb_counts):
        lines.append(f"  {name}: {n} blocks")
    for s in model.config_snapshot.get("stages", []):
        lines.append(f"  after {s['stage']}: {s['block_count']} blocks, {s['clause_count']} clauses")
    return "\n".join(lines)


# -- commands --------------------------------------------------------------------------

def cmd_train(args):
    o = Options(args)
    raw = _load_raw(o)
    data = normalize(raw)
    model = generate(data, _gen_cfg(o))
    if not args.no_simplify:
        model = simplify_pipeline(model, data, _simp_cfg(o))
    _write(args.out, serialize(model))
    print(_summary(model))
    print(f"model written to {args.out}")


def cmd_simplify(args):
    o = Options(args)
    model = _read_model(args.model)
    data = normalize_with(model.norm, _align(model, _load_raw(o)))
    model = simplify_pipeline(model, data, _simp_cfg(o))
    _write(args.out, serialize(model))
    print(_summary(model))
    print(f"model written to {args.out}")


def _align(model, raw):
    """Check a dataset against a model and index its classes the model's way."""
    if len(raw.attribute_names) != len(model.attribute_names):
        raise DataError(f"dataset has {len(raw.attribute_names)} attributes, model has {len(model.attribute_names)}")
    unknown = set(raw.class_names) - set(model.class_names)
    if unknown:
        raise DataError(f"dataset has classes unknown to the model: {', '.join(sorted(unknown))}")
    return replace(raw, class_names=model.class_names)


def cmd_classify(args):
    o = Options(args)
    model = _read_model(args.model)
    fb = _fb_cfg(o)
    train = None
    if o.data is not None or o.dataset is not None:
        train = normalize_with(model.norm, _align(model, _load_raw(o)))
    rows, labels = load_points(args.input, model.n_attributes, not o.no_header, o.label_column)
    clf = HBClassifier(model, fb, train)
    outcomes, coverage = clf.classify_batch(rows, raw=True) if len(rows) else ([], None)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "predicted_class", "route", "top_score"])
    for i, oc in enumerate(outcomes):
        name = "" if oc.predicted is None else model.class_names[oc.predicted]
        w.writerow([i, name, oc.route, repr(oc.top_score)])
    _write(args.out, buf.getvalue())
    if args.trace:
        trace = [{"row": i, "predicted": None if oc.predicted is None else model.class_names[oc.predicted],
                  "route": oc.route, "scores": list(oc.scores),
                  "contributing_blocks": list(oc.contributing_blocks),
                  "fallback_detail": oc.fallback_detail} for i, oc in enumerate(outcomes)]
        _write(args.trace, json.dumps(trace, indent=1) + "\n")
    cov = "n/a" if coverage is None else f"{coverage:.4f}"
    print(f"{len(outcomes)} rows classified, block coverage {cov}")
    if labels is not None and outcomes:
        correct = sum(oc.predicted is not None and model.class_names[oc.predicted] == y
                      for oc, y in zip(outcomes, labels))
        print(f"accuracy {100.0 * correct / len(outcomes):.2f}%")
    print(f"predictions written to {args.out}")


def cmd_cv(args):
    o = Options(args)
    raw = _load_raw(o)
    folds = int(o.folds)
    counts = {c: raw.labels.count(c) for c in raw.class_names}
    smallest = min(counts, key=counts.get)
    if folds < 2 or counts[smallest] < folds:
        raise ConfigError(f"{folds} folds needs at least {folds} rows per class; "
                          f"class {smallest!r} has {counts[smallest]}")
    seed = args.seed if args.seed is not None else o.file.get("seed")
    if seed is None:
        raise ConfigError("cv requires --seed")
    report = run_cv(raw, folds, _gen_cfg(o), _simp_cfg(o), _fb_cfg(o), int(seed),
                    simplify=not args.no_simplify)
    out = Path(args.out_dir)
    _write(out / "folds.csv", fold_table_csv(report))
    _write(out / "stats.csv", stats_csv(report))
    text = render_report(report, "text")
    _write(out / "summary.txt", text)
    _write(out / "config.json", json.dumps({"seed": report.seed, **report.config}, indent=1) + "\n")
    if not args.no_figures:
        from .plots import plot_cv_folds
        plot_cv_folds(report, out / "folds.png", title=args.title)
    sys.stdout.write(text)
    print(f"reports written to {out}")


def _grid_value(key, text):
    if key in ("removal_threshold", "max_disjunctions", "k"):
        return int(text)
    if key == "threshold_fraction":
        return float(text)
    return text


def cmd_grid(args):
    o = Options(args)
    raw = _load_raw(o)
    grid = {}
    for item in args.grid or []:
        if "=" not in item:
            raise ConfigError(f"grid entry {item!r} should look like name=v1,v2")
        key, vals = item.split("=", 1)
        key = key.strip().replace("-", "_")
        try:
            grid[key] = [_grid_value(key, v.strip()) for v in vals.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad values in grid entry {item!r}") from None
    ranked = grid_search(raw, grid, int(o.folds), int(args.seed), _gen_cfg(o), _simp_cfg(o), _fb_cfg(o))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(grid)
    w.writerow(["rank"] + keys + ["accuracy_avg", "accuracy_std", "block_count_avg", "clause_count_avg"])
    for r, (params, rep) in enumerate(ranked, 1):
        st = rep.stats
        w.writerow([r] + [params[k] for k in keys] + [
            repr(st["accuracy"]["average"]), repr(st["accuracy"]["std_dev"]),
            repr(st["block_count"]["average"]), repr(st["clause_count"]["average"])])
    _write(args.out, buf.getvalue())
    sys.stdout.write(buf.getvalue())


def _resolve_attrs(spec: str | None, names):
    if not spec:
        return None
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if tok in names:
            out.append(names.index(tok))
        else:
            try:
                out.append(int(tok))
            except ValueError:
                raise ConfigError(f"unknown attribute {tok!r}") from None
    return tuple(out)


def cmd_render(args):
    o = Options(args)
    model = _read_model(args.model)
    data = normalize_with(model.norm, _align(model, _load_raw(o)))
    blocks = list(model.blocks)
    if args.blocks == "largest":
        best = {}
        for b in blocks:
            if b.label not in best or b.coverage > best[b.label].coverage:
                best[b.label] = b
        blocks = [best[c] for c in sorted(best)]
    elif args.blocks not in (None, "all"):
        wanted = set(_int_list(args.blocks))
        blocks = [b for b in blocks if b.id in wanted]
    spec = RenderSpec(attributes=_resolve_attrs(args.attributes, list(model.attribute_names)),
                      sample_limit=args.sample_limit)
    svg = render_parallel_coordinates(data.points, data.labels, blocks, model.attribute_names, spec,
                                      model.class_names, args.title)
    _write(args.out, svg)
    print(f"{len(blocks)} blocks rendered to {args.out}")


def cmd_inspect(args):
    model = _read_model(args.model)
    blocks = sorted(model.blocks, key=lambda b: (-b.coverage, b.id))
    print(f"{len(blocks)} rules")
    for b in blocks:
        print(f"[{b.id}] coverage={b.coverage} clauses={clause_count(b)}: "
              f"{to_rule_text(b, model.attribute_names, model.class_names)}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hyperblocks", description="Hyperblock classification toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="generate (and simplify) a model")
    _add_data(p)
    _add_simplify(p)
    _add_common(p)
    p.add_argument("--out", required=True, help="model document path")
    p.add_argument("--no-simplify", action="store_true", help="skip R2A/R2B/disjunctive stages")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simplify", help="simplify an existing model against its training data")
    p.add_argument("--model", required=True)
    _add_data(p)
    _add_simplify(p)
    _add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("classify", help="classify rows of a CSV file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="CSV of points (label column optional)")
    _add_data(p, required=False)
    _add_fallback(p)
    _add_common(p)
    p.add_argument("--out", required=True, help="predictions CSV")
    p.add_argument("--trace", help="optional JSON decision trace")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cv", help="k-fold cross-validation report")
    _add_data(p)
    _add_simplify(p)
    _add_fallback(p)
    _add_common(p)
    p.add_argument("--folds", type=int, help="fold count (default 10)")
    p.add_argument("--seed", type=int, help="master shuffle seed (required)")
    p.add_argument("--out-dir", default="cv_report")
    p.add_argument("--no-simplify", action="store_true")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figure")
    p.add_argument("--title", help="figure title")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("grid", help="grid search over parameters with CV")
    _add_data(p)
    _add_simplify(p)
    _add_fallback(p)
    _add_common(p)
    p.add_argument("--grid", action="append", metavar="NAME=V1,V2",
                   help="parameter values, e.g. removal_threshold=1,5 (repeatable)")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="ranked results CSV")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("render", help="parallel-coordinates SVG of blocks and points")
    p.add_argument("--model", required=True)
    _add_data(p)
    _add_common(p)
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--attributes", help="comma-separated attribute names or indices")
    p.add_argument("--sample-limit", type=int, help="max points drawn per class")
    p.add_argument("--blocks", help="'all' (default), 'largest' per class, or comma-separated ids")
    p.add_argument("--title")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("inspect", help="list a model's rules")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, parse errors exit EXIT_USAGE
        return int(exc.code or 0)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"hyperblocks: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputIOError, OSError) as exc:
        print(f"hyperblocks: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataError, ModelFormatError) as exc:
        print(f"hyperblocks: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (AssertionError, HyperblockError) as exc:
        print(f"hyperblocks: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
