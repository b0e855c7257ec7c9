"""Mistrust metrics from interpersonal chart features and end-of-life care disparities."""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import DisparityReport, PipelineConfig, analyze, run_pipeline, score_admissions, train_model
from .cohort import Cohort, build_eol_cohort, build_notes_population, split_by_race
from .data_model import DataError, EhrDataset, load_dataset, write_dataset
from .synth import SynthConfig, generate

__all__ = [
    "Cohort",
    "DataError",
    "DisparityReport",
    "EhrDataset",
    "PipelineConfig",
    "SynthConfig",
    "analyze",
    "build_eol_cohort",
    "build_notes_population",
    "generate",
    "load_dataset",
    "run_pipeline",
    "score_admissions",
    "split_by_race",
    "train_model",
    "write_dataset",
]
