"""Hyperblock classification: interval-based rule generation, simplification
and explainable fallback classification."""

__version__ = "0.1.0"

from .classify import ClassificationOutcome, HBClassifier, classify_batch, classify_point
from .dataset import (Dataset, FoldPlan, NormalizationParams, RawDataset, apply_normalization,
                      attribute_std_devs, bundled_path, load_csv, normalize, normalize_with,
                      stratified_folds)
from .evaluation import CVReport, FoldResult, grid_search, per_class_accuracy, render_report, run_cv
from .fallback import ETSConfig, FallbackConfig
from .generation import GenerationConfig, cmh_merge, generate, interval_hyper
from .hyperblock import (HBModel, Hyperblock, clause_count, contains, deserialize, envelope,
                         purity_check, serialize, to_rule_text)
from .simplify import SimplifyConfig, attribute_order, disjunctive_merge, r2a, r2b, simplify_pipeline
from .viz import RenderSpec, render_parallel_coordinates
