"""Command-line pipeline: synth, cohort, train, score, analyze (and run = all three last).

Exit status is 0 on success, 1 on a validation error and 2 on a usage error.
Every command writes a ``manifest.json`` beside its outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, chart_features, noncompliance, sentiment, sparse_logreg, synth, treatments
from .analysis import (
    AnalysisError,
    PipelineConfig,
    analyze,
    read_scores,
    score_admissions,
    train_model,
    write_report,
    write_scores,
)
from .cohort import build_eol_cohort, build_notes_population, split_by_race, write_cohort
from .data_model import DataError, load_dataset

log = logging.getLogger("eolmistrust")

DATA_ENV = "EOLMISTRUST_DATA_DIR"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _inputs(*paths) -> dict[str, str]:
    out = {}
    for p in paths:
        if p is None:
            continue
        p = Path(p)
        files = sorted(p.glob("*.csv")) if p.is_dir() else [p]
        for f in files:
            out[str(f)] = _sha256(f)
    return out


def write_manifest(out_dir: Path, command: str, args: argparse.Namespace, inputs: dict, outputs: list[str], **extra) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    manifest = {
        "command": command,
        "config": _jsonable(config),
        "inputs": inputs,
        "outputs": sorted(outputs),
        "versions": {"eolmistrust": __version__, "numpy": np.__version__,
                     "python": ".".join(map(str, sys.version_info[:3]))},
        **_jsonable(extra),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _data_dir(args) -> Path:
    path = args.data_dir or os.environ.get(DATA_ENV)
    if not path:
        raise UsageError(f"no data directory given and ${DATA_ENV} is unset")
    return Path(path)


class UsageError(Exception):
    pass


def _pipeline_config(args) -> PipelineConfig:
    kw = {}
    if getattr(args, "C", None) is not None:
        kw.update(C=args.C, tol=args.tol, max_iter=args.max_iter, class_weight=args.class_weight)
    if getattr(args, "patterns", None):
        kw["patterns"] = noncompliance.read_patterns(args.patterns)
    elif getattr(args, "narrow", False):
        kw["patterns"] = noncompliance.NARROW_PATTERNS
    if getattr(args, "full_vocabulary", False):
        kw["whitelist"] = None
    elif getattr(args, "whitelist", None):
        kw["whitelist"] = tuple(sorted(chart_features.read_whitelist(args.whitelist)))
    for name in ("eol_min_stay", "notes_min_stay", "merge_gap", "exact_max_n", "sentiment_population"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "exclude_snf", False):
        kw["include_snf"] = False
    if getattr(args, "exclude_gaps", False):
        kw["count_gaps"] = False
    if getattr(args, "treatment", None):
        kw["treatments"] = tuple(args.treatment)
    if getattr(args, "strata", None):
        kw["strata"] = tuple(args.strata)
    return PipelineConfig(**kw)


# -- commands --------------------------------------------------------------


def cmd_synth(args) -> int:
    config = synth.read_config(args.config) if args.config else synth.SynthConfig()
    overrides = {k: v for k, v in (("seed", args.seed), ("n_admissions", args.n)) if v is not None}
    if overrides:
        config = config.replace(**overrides)
    out = Path(args.out_dir)
    ds, truth = synth.generate(config)
    from .data_model import write_dataset

    write_dataset(ds, out)
    synth.write_config(config, out / "synth_config.txt")
    synth.write_ground_truth(truth, out / "ground_truth.csv")
    outputs = ["admissions.csv", "chartevents.csv", "notes.csv", "durations.csv", "severity.csv",
               "synth_config.txt", "ground_truth.csv"]
    write_manifest(out, "synth", args, _inputs(args.config), outputs, seed=config.seed)
    print(f"wrote {len(ds.admissions)} synthetic admissions to {out}")
    return 0


def cmd_cohort(args) -> int:
    data = _data_dir(args)
    ds = load_dataset(data, strict=args.strict)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eol = build_eol_cohort(ds, args.eol_min_stay, not args.exclude_snf)
    white, black = split_by_race(eol, ds)
    notes_pop = build_notes_population(ds, args.notes_min_stay)
    files = {"eol.csv": eol, "eol_white.csv": white, "eol_black.csv": black, "notes_population.csv": notes_pop}
    for name, c in files.items():
        write_cohort(c, out / name)
    write_manifest(out, "cohort", args, _inputs(data), list(files))
    print(f"eol={len(eol)} (white={len(white)}, black={len(black)}) notes_population={len(notes_pop)}")
    return 0


def cmd_train(args) -> int:
    data = _data_dir(args)
    ds = load_dataset(data, strict=args.strict)
    config = _pipeline_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trained = train_model(ds, config)
    sparse_logreg.write_model(trained.model, out / "model.csv")
    chart_features.write_vocabulary(chart_features.FeatureVocabulary(trained.model.feature_names),
                                    out / "vocabulary.txt")
    noncompliance.write_labels(trained.labels, out / "labels.csv")
    m = trained.model
    write_manifest(out, "train", args, _inputs(data, args.patterns, args.whitelist),
                   ["model.csv", "vocabulary.txt", "labels.csv"],
                   fit={"iterations": m.iterations, "objective": m.objective, "converged": m.converged,
                        "positives": sum(trained.labels.values()), "population": len(trained.population)})
    if not m.converged:
        print(f"warning: solver hit max_iter={config.max_iter} before converging", file=sys.stderr)
    print(f"trained on {len(trained.population)} admissions ({sum(trained.labels.values())} noncompliant), "
          f"{np.count_nonzero(m.weights)}/{len(m.weights)} nonzero weights")
    return 0


def cmd_score(args) -> int:
    data = _data_dir(args)
    ds = load_dataset(data, strict=args.strict)
    model = sparse_logreg.read_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scores = score_admissions(ds, model)
    write_scores(scores, out / "scores.csv")
    write_manifest(out, "score", args, _inputs(data, args.model), ["scores.csv"])
    print(f"scored {len(scores)} admissions")
    return 0


def cmd_analyze(args) -> int:
    data = _data_dir(args)
    ds = load_dataset(data, strict=args.strict)
    scores = read_scores(args.scores)
    model = sparse_logreg.read_model(args.model) if args.model else None
    labels = noncompliance.read_labels(args.labels) if args.labels else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lexicon = sentiment.load_lexicon(args.lexicon)
    report = analyze(ds, scores, _pipeline_config(args), model, lexicon, labels)
    written = write_report(report, out)
    write_manifest(out, "analyze", args, _inputs(data, args.scores, args.model, args.labels, args.lexicon), written)
    print(f"report written to {out / 'report.json'}")
    return 0


def cmd_run(args) -> int:
    data = _data_dir(args)
    ds = load_dataset(data, strict=args.strict)
    config = _pipeline_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trained = train_model(ds, config)
    scores = score_admissions(ds, trained.model)
    sparse_logreg.write_model(trained.model, out / "model.csv")
    write_scores(scores, out / "scores.csv")
    noncompliance.write_labels(trained.labels, out / "labels.csv")
    lexicon = sentiment.load_lexicon(args.lexicon)
    report = analyze(ds, scores, config, trained.model, lexicon, trained.labels)
    written = write_report(report, out)
    write_manifest(out, "run", args, _inputs(data, args.patterns, args.whitelist, args.lexicon),
                   written + ["model.csv", "scores.csv", "labels.csv"])
    print(f"report written to {out / 'report.json'}")
    return 0


# -- parser ----------------------------------------------------------------


def _add_data(p):
    p.add_argument("data_dir", nargs="?", help=f"dataset directory (default: ${DATA_ENV})")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed row")


def _add_cohort_flags(p):
    p.add_argument("--eol-min-stay", type=int, default=360, help="minimum EOL stay in minutes (360)")
    p.add_argument("--notes-min-stay", type=int, default=720, help="minimum notes-population stay in minutes (720)")
    p.add_argument("--exclude-snf", action="store_true", help="strict EOL cohort without SNF discharges")


def _add_train_flags(p):
    p.add_argument("--C", type=float, default=sparse_logreg.DEFAULT_C, help="inverse L1 strength (1.0)")
    p.add_argument("--tol", type=float, default=sparse_logreg.DEFAULT_TOL, help="relative objective tolerance (1e-7)")
    p.add_argument("--max-iter", type=int, default=sparse_logreg.DEFAULT_MAX_ITER, help="solver iteration cap (5000)")
    p.add_argument("--class-weight", choices=["balanced"], default=None)
    p.add_argument("--patterns", help="noncompliance terms file, one per line")
    p.add_argument("--narrow", action="store_true", help="match only 'noncompliant'")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--whitelist", help="interpersonal item labels file (default: bundled list)")
    g.add_argument("--full-vocabulary", action="store_true", help="use every observed chart item")


def _add_analysis_flags(p):
    p.add_argument("--treatment", action="append", choices=list(treatments_choices()),
                   help="treatment to analyze (repeatable; default both)")
    p.add_argument("--strata", action="append", choices=["race", "trust", "severity"],
                   help="stratification (repeatable; default all)")
    p.add_argument("--lexicon", help="sentiment lexicon TSV (default: bundled)")
    p.add_argument("--merge-gap", type=int, default=treatments.MERGE_GAP_MINUTES,
                   help="merge spans separated by at most this many minutes (600)")
    p.add_argument("--exclude-gaps", action="store_true", help="do not count merged gaps as treatment time")
    p.add_argument("--exact-max-n", type=int, default=20, help="largest n1+n2 for the exact Mann-Whitney test (20)")
    p.add_argument("--sentiment-population", choices=["eol", "notes"], default="eol")


def treatments_choices():
    from .data_model import TREATMENTS

    return TREATMENTS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eolmistrust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("out_dir")
    p.add_argument("--config", help="key=value synthetic config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="number of admissions")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cohort", help="write EOL and notes-population cohort files")
    _add_data(p)
    _add_cohort_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("train", help="fit the mistrust model")
    _add_data(p)
    _add_cohort_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score every admission with a fitted model")
    _add_data(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("analyze", help="disparity, sentiment and correlation report")
    _add_data(p)
    _add_cohort_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--scores", required=True)
    p.add_argument("--model", help="model file, for the top-feature table")
    p.add_argument("--labels", help="noncompliance labels file, for the summary count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="train, score and analyze in one go")
    _add_data(p)
    _add_cohort_flags(p)
    _add_train_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eolmistrust: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, AnalysisError, synth.ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"eolmistrust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
