"""Dataset ingestion, feature extraction, and feature CSV round-tripping.

A dataset is a directory with one subdirectory per class, each holding
PGM/PNG images; the class label is the directory name.  Extraction
windows every image, optionally perturbs it, and emits one descriptor row
per window.  Row order is fixed by (class name, file name, window index)
so outputs never depend on filesystem enumeration order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import prism
from .image_io import load_image
from .images import GAUSSIAN_NOISE, Perturbation, split_windows
from .validation import check_feature_matrix

IMAGE_SUFFIXES = (".pgm", ".png")

# Stream tags keeping per-stage randomness independent; a per-sample seed
# is derived as SeedSequence([seed, stream, sample_index]).
NOISE_STREAM = 1


def derive_seed(base_seed: int, stream: int, index: int) -> int:
    """Deterministic per-stage, per-sample seed from the run's base seed."""
    return int(np.random.SeedSequence([base_seed, stream, index]).generate_state(1)[0])


class DatasetError(ValueError):
    """Raised when a dataset directory does not match the expected layout."""


def discover_dataset(root) -> list[tuple[str, Path]]:
    """List (class_name, image_path) pairs in deterministic order."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    class_dirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not class_dirs:
        raise DatasetError(f"dataset root {root} contains no class directories")
    entries = []
    for class_dir in class_dirs:
        files = sorted(
            (p for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
            key=lambda p: p.name,
        )
        if not files:
            raise DatasetError(f"class directory {class_dir} contains no PGM/PNG images")
        entries.extend((class_dir.name, p) for p in files)
    return entries


@dataclass(frozen=True)
class ExtractedFeatures:
    """One descriptor row per window, plus labels and layout metadata."""

    sample_ids: list[str]
    labels: np.ndarray
    X: np.ndarray
    feature_names: list[str]


def _image_windows(
    class_name: str,
    path: Path,
    window: int,
    perturbation: Perturbation | None,
    perturb_stage: str,
    base_seed: int,
    image_index: int,
):
    """Windows of one image with ids, perturbed per the requested stage."""
    img = load_image(path)
    if perturbation is not None and perturb_stage == "image":
        spec = perturbation
        if spec.kind == GAUSSIAN_NOISE:
            spec = replace(spec, seed=derive_seed(base_seed, NOISE_STREAM, image_index))
        img = spec.apply(img)
    out = []
    for wi, win_img in enumerate(split_windows(img, window)):
        sample_id = f"{class_name}/{path.name}#w{wi}"
        if perturbation is not None and perturb_stage == "window":
            spec = perturbation
            if spec.kind == GAUSSIAN_NOISE:
                # windows get independent noise streams keyed by a global index
                spec = replace(spec, seed=derive_seed(base_seed, NOISE_STREAM, image_index * 4096 + wi))
            win_img = spec.apply(win_img)
        out.append((sample_id, class_name, win_img))
    return out


def _describe(args):
    win_img, scales, exponents = args
    return prism.descriptor_vector(win_img, scales, exponents)


def extract_features(
    root,
    window: int = 128,
    exponents=(1.0,),
    scale_mode: str = "powers_of_two",
    max_scale: int | None = None,
    perturbation: Perturbation | None = None,
    perturb_stage: str = "window",
    seed: int = 0,
    workers: int = 1,
) -> ExtractedFeatures:
    """Extract descriptor rows for every window of every dataset image."""
    if perturb_stage not in ("window", "image"):
        raise ValueError(f"perturb_stage must be 'window' or 'image', got {perturb_stage!r}")
    samples = []
    for image_index, (class_name, path) in enumerate(discover_dataset(root)):
        samples.extend(
            _image_windows(class_name, path, window, perturbation, perturb_stage, seed, image_index)
        )
    if not samples:
        raise DatasetError(f"no window of side {window} fits any image under {root}")

    first = samples[0][2]
    if scale_mode == "powers_of_two":
        scales = prism.power_of_two_scales(first, max_scale)
    elif scale_mode == "linear":
        scales = prism.linear_scales(first, max_scale)
    else:
        raise ValueError(f"unknown scale_mode {scale_mode!r}")

    tasks = [(img, scales, exponents) for _, _, img in samples]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_describe, tasks, chunksize=8))
    else:
        rows = [_describe(t) for t in tasks]

    return ExtractedFeatures(
        sample_ids=[s[0] for s in samples],
        labels=np.asarray([s[1] for s in samples]),
        X=np.vstack(rows),
        feature_names=prism.descriptor_feature_names(scales, exponents),
    )


# ---------------------------------------------------------------------------
# Feature CSV (header row, '.' decimals, full round-trippable precision)
# ---------------------------------------------------------------------------


def write_feature_csv(path, features: ExtractedFeatures) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label", *features.feature_names])
        for sample_id, label, row in zip(features.sample_ids, features.labels, features.X):
            writer.writerow([sample_id, label, *(repr(float(v)) for v in row)])


def read_feature_csv(path) -> ExtractedFeatures:
    sample_ids: list[str] = []
    labels: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty feature file") from None
        if header[:2] != ["sample_id", "label"] or len(header) < 3:
            raise DatasetError(f"{path}: line 1: unexpected header {header[:3]}...")
        width = len(header)
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DatasetError(
                    f"{path}: line {line_no}: expected {width} fields, got {len(row)}"
                )
            sample_ids.append(row[0])
            labels.append(row[1])
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as bad:
                raise DatasetError(f"{path}: line {line_no}: {bad}") from None
    if not rows:
        raise DatasetError(f"{path}: no feature rows")
    return ExtractedFeatures(
        sample_ids=sample_ids,
        labels=np.asarray(labels),
        X=check_feature_matrix(rows),
        feature_names=header[2:],
    )
