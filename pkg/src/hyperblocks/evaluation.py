"""Cross-validation harness, metrics, grid search and report tables."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .classify import ABSTAIN, HB_VOTE, HBClassifier
from .dataset import RawDataset, normalize, normalize_with, stratified_folds
from .errors import ConfigError, HyperblockError
from .fallback import FallbackConfig
from .generation import GenerationConfig, generate
from .simplify import SimplifyConfig, simplify_pipeline

METRICS = ("accuracy", "block_count", "clause_count", "coverage")
STAT_ROWS = (("Average", "average"), ("Standard Deviation", "std_dev"),
             ("Minimum", "min"), ("Maximum", "max"))


@dataclass
class FoldResult:
    fold_index: int
    accuracy: float  # percent
    block_count: int
    clause_count: int
    coverage_fraction: float
    confusion: np.ndarray  # rows true class, columns predicted
    hb_confusion: np.ndarray
    fallback_confusion: np.ndarray
    abstained: int = 0

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum()) + self.abstained


@dataclass
class CVReport:
    folds: list[FoldResult]
    class_names: tuple[str, ...]
    seed: int
    config: dict = field(default_factory=dict)

    def values(self, metric: str) -> np.ndarray:
        attr = "coverage_fraction" if metric == "coverage" else metric
        return np.array([getattr(f, attr) for f in self.folds], dtype=float)

    @property
    def stats(self) -> dict[str, dict[str, float]]:
        """Average, population standard deviation, min and max of each metric."""
        out = {}
        for m in METRICS:
            v = self.values(m)
            out[m] = {"average": float(v.mean()), "std_dev": float(v.std(ddof=0)),
                      "min": float(v.min()), "max": float(v.max())}
        return out

    def per_class(self) -> list[dict]:
        hb = sum(f.hb_confusion for f in self.folds)
        fb = sum(f.fallback_confusion for f in self.folds)
        return per_class_accuracy(hb, fb, self.class_names)


def per_class_accuracy(hb_confusion, fallback_confusion, class_names=None) -> list[dict]:
    """Correct/total per true class for block-routed, fallback-routed and all points.

    A class with no test points on a route gets ``None`` rather than 0.
    """
    hb = np.asarray(hb_confusion)
    fb = np.asarray(fallback_confusion)
    rows = []
    for c in range(hb.shape[0]):
        def rate(m):
            total = m[c].sum()
            return None if total == 0 else float(m[c, c] / total)
        comb = hb + fb
        rows.append({
            "class": class_names[c] if class_names else c,
            "hb": rate(hb), "fallback": rate(fb), "combined": rate(comb),
            "hb_n": int(hb[c].sum()), "fallback_n": int(fb[c].sum()),
        })
    return rows


def train_fold(raw: RawDataset, train_idx, gen_cfg=None, simp_cfg=None, simplify=True):
    """Normalize on training rows only, generate and (optionally) simplify."""
    train = normalize(raw.subset(train_idx))
    model = generate(train, gen_cfg)
    if simplify:
        model = simplify_pipeline(model, train, simp_cfg)
    return model, train


def evaluate_fold(fold_index, raw, train_idx, test_idx, gen_cfg=None, simp_cfg=None,
                  fb_cfg=None, simplify=True) -> FoldResult:
    model, train = train_fold(raw, train_idx, gen_cfg, simp_cfg, simplify)
    test = normalize_with(train.norm, raw.subset(test_idx))
    outcomes, coverage = HBClassifier(model, fb_cfg or FallbackConfig(), train).classify_batch(test.points)
    K = len(raw.class_names)
    conf = np.zeros((K, K), dtype=int)
    hb_conf = np.zeros((K, K), dtype=int)
    fb_conf = np.zeros((K, K), dtype=int)
    abstained = 0
    for y, o in zip(test.labels, outcomes):
        if o.route == ABSTAIN:
            abstained += 1
            continue
        conf[y, o.predicted] += 1
        (hb_conf if o.route == HB_VOTE else fb_conf)[y, o.predicted] += 1
    total = len(outcomes)
    return FoldResult(
        fold_index=fold_index,
        accuracy=float(100.0 * np.trace(conf) / total),
        block_count=len(model.blocks),
        clause_count=model.total_clauses(),
        coverage_fraction=float(coverage),
        confusion=conf, hb_confusion=hb_conf, fallback_confusion=fb_conf,
        abstained=abstained,
    )


def _config_dict(gen_cfg, simp_cfg, fb_cfg, simplify, k_folds):
    gen = asdict(gen_cfg)
    gen.pop("workers")
    simp = asdict(simp_cfg)
    if not isinstance(simp["attribute_order"], str):
        simp["attribute_order"] = list(simp["attribute_order"])
    simp["stages"] = list(simp["stages"])
    fb = asdict(fb_cfg)
    if fb["thresholds"] is not None:
        fb["thresholds"] = list(fb["thresholds"])
    return {"folds": k_folds, "simplify": simplify, "generation": gen,
            "simplification": simp, "fallback": fb}


def run_cv(raw: RawDataset, k_folds: int = 10, gen_cfg: GenerationConfig | None = None,
           simp_cfg: SimplifyConfig | None = None, fb_cfg: FallbackConfig | None = None,
           seed: int = 0, simplify: bool = True) -> CVReport:
    gen_cfg = gen_cfg or GenerationConfig()
    simp_cfg = simp_cfg or SimplifyConfig()
    fb_cfg = fb_cfg or FallbackConfig()
    plan = stratified_folds(raw, k_folds, seed)
    folds = []
    for f in range(k_folds):
        train_idx, test_idx = plan.train_test(f)
        try:
            folds.append(evaluate_fold(f, raw, train_idx, test_idx, gen_cfg, simp_cfg, fb_cfg, simplify))
        except HyperblockError as exc:
            raise type(exc)(f"fold {f}: {exc}") from exc
    return CVReport(folds, raw.class_names, seed, _config_dict(gen_cfg, simp_cfg, fb_cfg, simplify, k_folds))


GRID_KEYS = {
    "removal_threshold": "simp", "max_disjunctions": "simp", "attribute_order": "simp",
    "k": "fb", "threshold_fraction": "fb", "method": "fb", "metric": "fb",
}


def grid_search(raw: RawDataset, grid: dict, k_folds: int = 10, seed: int = 0,
                gen_cfg=None, simp_cfg=None, fb_cfg=None, simplify=True):
    """Run CV for every combination in ``grid``.

    Returns ``[(params, report), ...]`` best first: highest average
    accuracy, then lowest average clause count, then grid order.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("grid search needs at least one value for every parameter")
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ConfigError(f"unknown grid parameter(s): {', '.join(sorted(unknown))}")
    simp_cfg = simp_cfg or SimplifyConfig()
    fb_cfg = fb_cfg or FallbackConfig()
    keys = list(grid)
    results = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, combo))
        s = replace(simp_cfg, **{k: v for k, v in params.items() if GRID_KEYS[k] == "simp"})
        f = replace(fb_cfg, **{k: v for k, v in params.items() if GRID_KEYS[k] == "fb"})
        results.append((params, run_cv(raw, k_folds, gen_cfg, s, f, seed, simplify)))
    order = sorted(range(len(results)), key=lambda i: (
        -results[i][1].stats["accuracy"]["average"],
        results[i][1].stats["clause_count"]["average"], i))
    return [results[i] for i in order]


# -- rendering ------------------------------------------------------------------

def _fold_rows(report: CVReport):
    for f in report.folds:
        yield [f.fold_index + 1, f.accuracy, f.block_count, f.clause_count, f.coverage_fraction]


def _check(report: CVReport):
    if not report.folds:
        raise ConfigError("report has no folds")


def fold_table_csv(report: CVReport) -> str:
    _check(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fold", "accuracy", "block_count", "clause_count", "coverage"])
    for row in _fold_rows(report):
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def stats_csv(report: CVReport) -> str:
    _check(report)
    st = report.stats
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic"] + list(METRICS))
    for label, key in STAT_ROWS:
        w.writerow([label] + [repr(float(st[m][key])) for m in METRICS])
    return buf.getvalue()


def _text(report: CVReport) -> str:
    st = report.stats
    lines = [f"{'Fold':>4}  {'Accuracy %':>10}  {'Blocks':>6}  {'Clauses':>7}  {'Coverage':>8}"]
    for fold, acc, blocks, clauses, cov in _fold_rows(report):
        lines.append(f"{fold:>4}  {acc:>10.2f}  {blocks:>6d}  {clauses:>7d}  {cov:>8.3f}")
    lines.append("")
    lines.append(f"{'Statistic':<18}  {'Accuracy %':>10}  {'Blocks':>6}  {'Clauses':>7}  {'Coverage':>8}")
    for label, key in STAT_ROWS:
        a, b, c, v = (st[m][key] for m in METRICS)
        lines.append(f"{label:<18}  {a:>10.2f}  {b:>6.2f}  {c:>7.2f}  {v:>8.3f}")
    lines.append("")
    lines.append(f"{'Class':<18}  {'HB':>6}  {'Fallback':>8}  {'Combined':>8}")
    for row in report.per_class():
        cells = ["-" if row[k] is None else f"{row[k]:.3f}" for k in ("hb", "fallback", "combined")]
        lines.append(f"{str(row['class']):<18}  {cells[0]:>6}  {cells[1]:>8}  {cells[2]:>8}")
    lines.append("")
    lines.append(f"seed {report.seed}, {len(report.folds)} folds")
    return "\n".join(lines) + "\n"


def render_report(report: CVReport, fmt: str = "text") -> str:
    """Fold table plus statistics, as aligned text or CSV.

    CSV floats use round-trip precision so a reparse gives identical numbers;
    the text form shows two decimals like the usual result tables.
    """
    _check(report)
    if fmt == "csv":
        return fold_table_csv(report) + "\n" + stats_csv(report)
    if fmt == "text":
        return _text(report)
    raise ConfigError(f"unknown report format {fmt!r}")
