import numpy as np
import pytest

from triprism import synth_fbm, write_pgm


@pytest.fixture
def tiny_dataset(tmp_path):
    """Three-class dataset of one 64x64 texture each; windows of 32 give
    4 samples per class, enough for small k-fold runs."""
    root = tmp_path / "data"
    for c in range(3):
        class_dir = root / f"class{c}"
        class_dir.mkdir(parents=True)
        img = synth_fbm(0.2 + 0.3 * c, 65, seed=c)[:64, :64]
        write_pgm(class_dir / "tex.pgm", img)
    return root


def random_image(rng, shape, lo=0.0, hi=255.0):
    return rng.uniform(lo, hi, shape)
