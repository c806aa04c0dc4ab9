"""Command-line interface: extract, classify, retrieve, sweep, perturb, synth.

Every command is deterministic given its inputs and the seed: reports
carry no timestamps, floats are written with round-trippable precision,
and row orders are fixed by content, so reruns are byte-identical.  Each
JSON report embeds a schema version, the fully resolved configuration,
and a SHA-256 content hash of the inputs it consumed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evaluation, prism
from .datasets import (
    DatasetError,
    ExtractedFeatures,
    derive_seed,
    discover_dataset,
    extract_features,
    read_feature_csv,
    write_feature_csv,
)
from .estimators import DEFAULT_EXPONENTS, KLTransform
from .image_io import load_image, write_pgm
from .images import GAUSSIAN_NOISE, ROTATION, Perturbation, split_windows, synth_fbm
from .model_selection import component_sweep, cross_validate

REPORT_SCHEMA_VERSION = 1
FBM_STREAM = 2

PROFILES = {
    "brodatz": tuple(round(1.0 + 0.1 * i, 10) for i in range(9)),
    "vistex": tuple(round(0.4 + 0.1 * i, 10) for i in range(9)),
}

NOISE_LEVELS = (0.01, 0.02, 0.03, 0.04, 0.05)
ROTATION_LEVELS = (0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0)


@dataclass
class ExperimentConfig:
    """Union of all experiment knobs; subcommands use the relevant subset."""

    dataset_root: str | None = None
    features: str | None = None
    output_dir: str = "out"
    window: int = 128
    schedule: str = "powers_of_two"
    max_scale: int | None = None
    alphas: tuple[float, ...] = DEFAULT_EXPONENTS
    kl_components: int | None = None
    folds: int = 10
    ridge: float | None = None
    seed: int = 0
    workers: int = 1
    paper_mode: bool = False
    retrieval_space: str = "kl"
    perturb_kind: str | None = None
    noise_ratio: float = 0.0
    noise_sigma: float = 25.5
    angle: float = 0.0
    perturb_stage: str = "window"
    levels: tuple[float, ...] | None = None
    crop_at_zero: bool = False
    alpha_grid: tuple[float, ...] = ()
    hurst: tuple[float, ...] = (0.2, 0.5, 0.8)
    size: int = 257
    n_seeds: int = 5


def parse_float_list(text: str) -> tuple[float, ...]:
    """Parse '1.0,1.1' or an inclusive 'min:max:step' range."""
    text = text.strip()
    if ":" in text:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
        if step <= 0:
            raise ValueError(f"range step must be positive in {text!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(round(lo + i * step, 10) for i in range(count))
    return tuple(float(v) for v in text.split(","))


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {line_no}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_LIST_FIELDS = {"alphas", "levels", "alpha_grid", "hurst"}
_BOOL_FIELDS = {"paper_mode", "crop_at_zero"}
_INT_FIELDS = {"window", "kl_components", "folds", "seed", "workers", "max_scale", "size", "n_seeds"}
_FLOAT_FIELDS = {"ridge", "noise_ratio", "noise_sigma", "angle"}


def _convert_config_value(key: str, value: str):
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key {key!r}")
    if key in _LIST_FIELDS:
        return parse_float_list(value)
    if key in _BOOL_FIELDS:
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"config key {key!r} expects a boolean, got {value!r}")
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    return value


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults < config file < explicit command-line flags."""
    merged: dict = {}
    if getattr(args, "config", None):
        for key, raw in _parse_config_file(args.config).items():
            merged[key] = _convert_config_value(key, raw)
    profile = getattr(args, "profile", None)
    if profile is not None:
        merged["alphas"] = PROFILES[profile]
    for name in _FIELD_TYPES:
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            merged[name] = tuple(cli_value) if name in _LIST_FIELDS else cli_value
    return ExperimentConfig(**merged)


def config_as_dict(config: ExperimentConfig) -> dict:
    out = {}
    for key, value in dataclasses.asdict(config).items():
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def hash_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def hash_dataset(root) -> str:
    digest = hashlib.sha256()
    for class_name, path in discover_dataset(root):
        digest.update(f"{class_name}/{path.name}\n".encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _report(command: str, config: ExperimentConfig, input_sha256: str, body: dict) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": config_as_dict(config),
        "input_sha256": input_sha256,
        **body,
    }


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _perturbation_from_config(config: ExperimentConfig) -> Perturbation | None:
    if config.perturb_kind is None:
        return None
    return Perturbation(
        kind=config.perturb_kind,
        noise_ratio=config.noise_ratio,
        noise_sigma=config.noise_sigma,
        angle_degrees=config.angle,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_extract(config: ExperimentConfig) -> Path:
    if config.dataset_root is None:
        raise DatasetError("extract needs --dataset")
    out = _out_dir(config)
    features = extract_features(
        config.dataset_root,
        window=config.window,
        exponents=config.alphas,
        scale_mode=config.schedule,
        max_scale=config.max_scale,
        perturbation=_perturbation_from_config(config),
        perturb_stage=config.perturb_stage,
        seed=config.seed,
        workers=config.workers,
    )
    csv_path = out / "features.csv"
    write_feature_csv(csv_path, features)
    write_json(
        out / "extract_report.json",
        _report(
            "extract",
            config,
            hash_dataset(config.dataset_root),
            {
                "n_samples": len(features.sample_ids),
                "n_features": features.X.shape[1],
                "feature_names": features.feature_names,
                "features_csv": csv_path.name,
            },
        ),
    )
    return csv_path


def _classify_matrix(config: ExperimentConfig, X: np.ndarray, labels: np.ndarray) -> dict:
    max_k = config.kl_components or X.shape[1]
    max_k = min(max_k, X.shape[1])
    results = component_sweep(
        X,
        labels,
        components=list(range(1, max_k + 1)),
        n_folds=config.folds,
        ridge=config.ridge,
        seed=config.seed,
        paper_mode=config.paper_mode,
    )
    best = max(results, key=lambda r: (r.mean_accuracy, -r.n_components))
    cm = evaluation.confusion_matrix(labels, best.predictions)
    return {
        "series": [
            {
                "components": r.n_components,
                "accuracy": r.mean_accuracy,
                "std_error": r.std_error,
            }
            for r in results
        ],
        "best": {
            "components": best.n_components,
            "accuracy": best.mean_accuracy,
            "std_error": best.std_error,
        },
        "confusion": cm.to_dict(),
        "_cm": cm,
    }


def cmd_classify(config: ExperimentConfig) -> dict:
    if config.features is None:
        raise DatasetError("classify needs --features")
    out = _out_dir(config)
    features = read_feature_csv(config.features)
    body = _classify_matrix(config, features.X, features.labels)
    cm = body.pop("_cm")
    write_csv(
        out / "accuracy_vs_components.csv",
        ["components", "accuracy", "std_error"],
        [(s["components"], s["accuracy"], s["std_error"]) for s in body["series"]],
    )
    write_csv(
        out / "confusion.csv",
        ["true_class", *map(str, cm.classes)],
        [(str(c), *counts) for c, counts in zip(cm.classes, cm.counts)],
    )
    write_pgm(out / "confusion.pgm", evaluation.confusion_to_image(cm))
    report = _report("classify", config, hash_file(config.features), body)
    write_json(out / "classify_report.json", report)
    return report


def cmd_retrieve(config: ExperimentConfig) -> dict:
    if config.features is None:
        raise DatasetError("retrieve needs --features")
    out = _out_dir(config)
    features = read_feature_csv(config.features)
    if config.retrieval_space == "kl":
        k = config.kl_components or features.X.shape[1]
        X = KLTransform(n_components=min(k, features.X.shape[1])).fit(features.X).transform(features.X)
    elif config.retrieval_space == "raw":
        X = features.X
    else:
        raise ValueError(f"retrieval_space must be 'kl' or 'raw', got {config.retrieval_space!r}")

    labels = features.labels
    classes = np.unique(labels)
    counts = {c: int(np.sum(labels == c)) for c in classes}
    thin = [c for c, n in counts.items() if n < 2]
    if thin:
        raise DatasetError(f"retrieval needs >= 2 samples per class; too few in {thin}")

    grid = evaluation.default_recall_grid()
    per_class_curves = []
    for cls in classes:
        members = np.flatnonzero(labels == cls)
        curves = []
        for query in members:
            ranking = evaluation.retrieval_ranking(int(query), X)
            relevant = [int(i) for i in members if i != query]
            curves.append(evaluation.pr_curve(int(query), ranking, relevant))
        per_class_curves.append(evaluation.average_pr(curves, grid, label=str(cls)))
    overall = evaluation.average_pr(per_class_curves, grid)

    write_csv(
        out / "pr_average.csv",
        ["recall", "precision"],
        zip(overall.recalls.tolist(), overall.precisions.tolist()),
    )
    per_class_rows = []
    for curve in per_class_curves:
        per_class_rows.extend(
            (curve.label, r, p) for r, p in zip(curve.recalls.tolist(), curve.precisions.tolist())
        )
    write_csv(out / "pr_per_class.csv", ["class", "recall", "precision"], per_class_rows)

    report = _report(
        "retrieve",
        config,
        hash_file(config.features),
        {
            "auc": evaluation.auc(overall),
            "per_class_auc": {c.label: evaluation.auc(c) for c in per_class_curves},
        },
    )
    write_json(out / "retrieval_report.json", report)
    return report


_FEATURE_NAME = re.compile(r"^lnS_a(?P<alpha>-?[0-9.]+)_e(?P<scale>[0-9]+)$")


def _columns_by_alpha(feature_names: list[str]) -> dict[float, list[int]]:
    groups: dict[float, list[int]] = {}
    for col, name in enumerate(feature_names):
        match = _FEATURE_NAME.match(name)
        if match is None:
            raise DatasetError(f"feature column {name!r} does not follow the lnS_a*_e* layout")
        groups.setdefault(float(match.group("alpha")), []).append(col)
    return groups


def cmd_sweep(config: ExperimentConfig) -> dict:
    out = _out_dir(config)
    grid = config.alpha_grid or parse_float_list("-1.0:2.0:0.1")
    if config.features is not None:
        features = read_feature_csv(config.features)
        input_hash = hash_file(config.features)
        by_alpha = _columns_by_alpha(features.feature_names)
        missing = [a for a in grid if a not in by_alpha]
        if missing:
            raise DatasetError(f"feature file lacks exponents {missing}; re-extract or adjust grid")
    else:
        if config.dataset_root is None:
            raise DatasetError("sweep needs --features or --dataset")
        features = extract_features(
            config.dataset_root,
            window=config.window,
            exponents=grid,
            scale_mode=config.schedule,
            max_scale=config.max_scale,
            seed=config.seed,
            workers=config.workers,
        )
        input_hash = hash_dataset(config.dataset_root)
        by_alpha = _columns_by_alpha(features.feature_names)

    rows = []
    for alpha in grid:
        cols = by_alpha[alpha]
        block = features.X[:, cols]
        k = min(config.kl_components or block.shape[1], block.shape[1])
        result = cross_validate(
            block,
            features.labels,
            n_folds=config.folds,
            n_components=k,
            ridge=config.ridge,
            seed=config.seed,
            paper_mode=config.paper_mode,
        )
        rows.append((alpha, result.mean_accuracy, result.std_error))
    write_csv(out / "sweep.csv", ["alpha", "accuracy", "std_error"], rows)
    report = _report(
        "sweep",
        config,
        input_hash,
        {"points": [{"alpha": a, "accuracy": acc, "std_error": se} for a, acc, se in rows]},
    )
    write_json(out / "sweep_report.json", report)
    return report


def _materialize_perturbed(
    config: ExperimentConfig, perturbation: Perturbation, target: Path
) -> int:
    """Write a perturbed copy of the dataset; returns the window side.

    With the default 'window' stage each window becomes its own image
    file, so re-extraction sees exactly the perturbed windows.
    """
    from dataclasses import replace

    base_seed = config.seed
    sample_index = 0
    window_side = None
    for image_index, (class_name, path) in enumerate(discover_dataset(config.dataset_root)):
        class_dir = target / class_name
        class_dir.mkdir(parents=True, exist_ok=True)
        img = load_image(path)
        if config.perturb_stage == "image":
            spec = perturbation
            if spec.kind == GAUSSIAN_NOISE:
                spec = replace(spec, seed=derive_seed(base_seed, 1, image_index))
            out_img = spec.apply(img)
            write_pgm(class_dir / f"{path.stem}.pgm", out_img)
            window_side = config.window if spec.kind == GAUSSIAN_NOISE else min(
                config.window, out_img.shape[0]
            )
            continue
        for wi, win_img in enumerate(split_windows(img, config.window)):
            spec = perturbation
            if spec.kind == GAUSSIAN_NOISE:
                spec = replace(spec, seed=derive_seed(base_seed, 1, image_index * 4096 + wi))
            out_img = spec.apply(win_img)
            write_pgm(class_dir / f"{path.stem}_w{wi}.pgm", out_img)
            window_side = out_img.shape[0]
            sample_index += 1
    if window_side is None:
        raise DatasetError(f"no window of side {config.window} fits any image")
    return window_side


def cmd_perturb(config: ExperimentConfig) -> dict:
    if config.dataset_root is None:
        raise DatasetError("perturb needs --dataset")
    if config.perturb_kind not in (GAUSSIAN_NOISE, ROTATION):
        raise ValueError("perturb needs --kind gaussian_noise or rotation")
    out = _out_dir(config)
    levels = config.levels or (NOISE_LEVELS if config.perturb_kind == GAUSSIAN_NOISE else ROTATION_LEVELS)

    rows = []
    for level in levels:
        identity = (
            config.perturb_kind == ROTATION and level == 0.0 and not config.crop_at_zero
        ) or (config.perturb_kind == GAUSSIAN_NOISE and level == 0.0)
        if identity:
            dataset_root = config.dataset_root
            window = config.window
        else:
            if config.perturb_kind == GAUSSIAN_NOISE:
                perturbation = Perturbation(
                    kind=GAUSSIAN_NOISE, noise_ratio=level, noise_sigma=config.noise_sigma
                )
            else:
                perturbation = Perturbation(kind=ROTATION, angle_degrees=level % 360.0)
            target = out / f"perturbed_{config.perturb_kind}_{level:g}"
            window = _materialize_perturbed(config, perturbation, target)
            dataset_root = target
        features = extract_features(
            dataset_root,
            window=window,
            exponents=config.alphas,
            scale_mode=config.schedule,
            max_scale=config.max_scale,
            seed=config.seed,
            workers=config.workers,
        )
        k = min(config.kl_components or features.X.shape[1], features.X.shape[1])
        result = cross_validate(
            features.X,
            features.labels,
            n_folds=config.folds,
            n_components=k,
            ridge=config.ridge,
            seed=config.seed,
            paper_mode=config.paper_mode,
        )
        rows.append((level, result.mean_accuracy, result.std_error))

    write_csv(out / "perturb_table.csv", ["level", "accuracy", "std_error"], rows)
    report = _report(
        "perturb",
        config,
        hash_dataset(config.dataset_root),
        {
            "kind": config.perturb_kind,
            "table": [
                {"level": lv, "accuracy": acc, "std_error": se} for lv, acc, se in rows
            ],
        },
    )
    write_json(out / "perturb_report.json", report)
    return report


def cmd_synth(config: ExperimentConfig) -> dict:
    out = _out_dir(config)
    rows = []
    for h_index, hurst in enumerate(config.hurst):
        for s in range(config.n_seeds):
            fbm_seed = derive_seed(config.seed, FBM_STREAM, h_index * 1024 + s)
            img = synth_fbm(hurst, config.size, seed=fbm_seed)
            write_pgm(out / f"fbm_h{hurst:g}_s{s}.pgm", img)
            dim = prism.fractal_dimension(img, prism.dimension_scales(img))
            rows.append((hurst, s, dim))
    write_csv(out / "synth_dimensions.csv", ["hurst", "seed_index", "dimension"], rows)
    report = _report(
        "synth",
        config,
        "",
        {
            "dimensions": [
                {"hurst": h, "seed_index": s, "dimension": d} for h, s, d in rows
            ]
        },
    )
    write_json(out / "synth_report.json", report)
    return report


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--output-dir", dest="output_dir", help="directory for all outputs")
    p.add_argument("--seed", type=int, help="base seed; per-stage seeds derive from it")


def _add_extraction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", dest="dataset_root", help="root with one directory per class")
    p.add_argument("--window", type=int, help="window side in pixels (default 128)")
    p.add_argument("--alphas", type=parse_float_list, help="exponents: list or min:max:step")
    p.add_argument("--profile", choices=sorted(PROFILES), help="preset exponent range")
    p.add_argument("--schedule", choices=["powers_of_two", "linear"], help="scale schedule mode")
    p.add_argument("--max-scale", dest="max_scale", type=int, help="largest cell side")
    p.add_argument("--workers", type=int, help="extraction worker processes")


def _add_pipeline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--components", dest="kl_components", type=int, help="retained KL components")
    p.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    p.add_argument("--ridge", type=float, help="LDA ridge; default 1e-6 * trace / n")
    p.add_argument(
        "--paper-mode",
        dest="paper_mode",
        action="store_const",
        const=True,
        help="fit the KL basis on all data instead of training folds only",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triprism",
        description="Exponent-weighted triangular-prism texture descriptors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract descriptor features to CSV")
    _add_common(p)
    _add_extraction(p)
    p.add_argument("--noise-ratio", dest="noise_ratio", type=float, help="perturb: noisy pixel fraction")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="perturb: noise stddev")
    p.add_argument("--angle", type=float, help="perturb: rotation angle in degrees")
    p.add_argument("--kind", dest="perturb_kind", choices=[GAUSSIAN_NOISE, ROTATION])
    p.add_argument("--perturb-stage", dest="perturb_stage", choices=["window", "image"])
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("classify", help="cross-validated KL + LDA classification report")
    _add_common(p)
    p.add_argument("--features", help="feature CSV from extract")
    _add_pipeline(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("retrieve", help="one-vs-rest precision/recall and AUC")
    _add_common(p)
    p.add_argument("--features", help="feature CSV from extract")
    p.add_argument("--components", dest="kl_components", type=int, help="retained KL components")
    p.add_argument("--space", dest="retrieval_space", choices=["kl", "raw"], help="descriptor space")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("sweep", help="accuracy per single exponent over a grid")
    _add_common(p)
    _add_extraction(p)
    p.add_argument("--features", help="reuse a feature CSV holding the grid exponents")
    p.add_argument("--alpha-grid", dest="alpha_grid", type=parse_float_list, help="sweep grid")
    _add_pipeline(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("perturb", help="noise/rotation robustness table")
    _add_common(p)
    _add_extraction(p)
    p.add_argument("--kind", dest="perturb_kind", choices=[GAUSSIAN_NOISE, ROTATION])
    p.add_argument("--levels", type=parse_float_list, help="noise ratios or angles")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--perturb-stage", dest="perturb_stage", choices=["window", "image"])
    p.add_argument(
        "--crop-at-zero",
        dest="crop_at_zero",
        action="store_const",
        const=True,
        help="apply the rotation crop at angle 0 too (reproduces published baselines)",
    )
    _add_pipeline(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("synth", help="synthesize fractional Brownian textures")
    _add_common(p)
    p.add_argument("--hurst", type=parse_float_list, help="Hurst exponents")
    p.add_argument("--size", type=int, help="image side (default 257)")
    p.add_argument("--n-seeds", dest="n_seeds", type=int, help="images per Hurst value")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        args.func(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
