"""Exponent-weighted triangular-prism fractal descriptors for texture analysis.

Images are 2-D float64 numpy arrays (height x width) with intensities in
[0, 255]; feature matrices hold one sample per row.  The package follows
scikit-learn estimator conventions, so the extractors and models compose
with pipelines and model-selection tooling.
"""

from .datasets import (
    DatasetError,
    ExtractedFeatures,
    discover_dataset,
    extract_features,
    read_feature_csv,
    write_feature_csv,
)
from .estimators import (
    DEFAULT_EXPONENTS,
    DegenerateClassError,
    KLTransform,
    LinearDiscriminantClassifier,
    PrismDescriptorExtractor,
    covariance,
    load_model,
    save_model,
)
from .evaluation import (
    ConfusionMatrix,
    PRCurve,
    auc,
    average_pr,
    confusion_matrix,
    confusion_to_image,
    pr_curve,
    retrieval_ranking,
)
from .image_io import ImageFormatError, load_image, read_pgm, read_png, rgb_to_gray, write_pgm
from .images import (
    DEFAULT_NOISE_SIGMA,
    GAUSSIAN_NOISE,
    ROTATION,
    Perturbation,
    add_gaussian_noise,
    rotate_and_crop,
    split_windows,
    synth_fbm,
)
from .model_selection import CrossValResult, SplitError, cross_validate, component_sweep, stratified_kfold
from .prism import (
    CellGeometry,
    ScaleError,
    area_curve,
    cell_area,
    cell_areas,
    cell_count,
    cell_geometry,
    descriptor_feature_names,
    descriptor_vector,
    dimension_from_curve,
    dimension_scales,
    face_area_closed_form,
    fractal_dimension,
    linear_scales,
    power_of_two_scales,
    weighted_area_sum,
)
from .validation import check_feature_matrix, check_gray_image, check_labels

__version__ = "0.1.0"

__all__ = [
    "CellGeometry",
    "ConfusionMatrix",
    "CrossValResult",
    "DEFAULT_EXPONENTS",
    "DEFAULT_NOISE_SIGMA",
    "DatasetError",
    "DegenerateClassError",
    "ExtractedFeatures",
    "GAUSSIAN_NOISE",
    "ImageFormatError",
    "KLTransform",
    "LinearDiscriminantClassifier",
    "PRCurve",
    "Perturbation",
    "PrismDescriptorExtractor",
    "ROTATION",
    "ScaleError",
    "SplitError",
    "add_gaussian_noise",
    "area_curve",
    "auc",
    "average_pr",
    "cell_area",
    "cell_areas",
    "cell_count",
    "cell_geometry",
    "check_feature_matrix",
    "check_gray_image",
    "check_labels",
    "component_sweep",
    "confusion_matrix",
    "confusion_to_image",
    "covariance",
    "cross_validate",
    "descriptor_feature_names",
    "descriptor_vector",
    "dimension_from_curve",
    "dimension_scales",
    "discover_dataset",
    "extract_features",
    "face_area_closed_form",
    "fractal_dimension",
    "linear_scales",
    "load_image",
    "load_model",
    "power_of_two_scales",
    "pr_curve",
    "read_feature_csv",
    "read_pgm",
    "read_png",
    "retrieval_ranking",
    "rgb_to_gray",
    "rotate_and_crop",
    "save_model",
    "split_windows",
    "stratified_kfold",
    "synth_fbm",
    "weighted_area_sum",
    "write_feature_csv",
    "write_pgm",
]
