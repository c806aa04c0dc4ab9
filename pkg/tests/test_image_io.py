import numpy as np
import pytest
from PIL import Image

from triprism import ImageFormatError, load_image, read_pgm, rgb_to_gray, write_pgm


def test_p2_ascii_decode(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_text("P2\n2 2\n255\n0 10 20 30\n")
    img = load_image(path)
    assert img.shape == (2, 2)
    assert img.ravel().tolist() == [0.0, 10.0, 20.0, 30.0]


def test_p2_comments_and_odd_whitespace(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_text("P2  # magic\n# a comment line\n 2\t2 # dims\n255\n0\n10 20\t30")
    assert load_image(path).ravel().tolist() == [0.0, 10.0, 20.0, 30.0]


def test_p5_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    img = np.floor(rng.uniform(0, 256, (7, 5)))
    path = tmp_path / "x.pgm"
    write_pgm(path, img)
    assert np.array_equal(read_pgm(path), img)


def test_write_rounds_half_up_and_clamps(tmp_path):
    path = tmp_path / "x.pgm"
    write_pgm(path, np.array([[10.5, 10.4], [-3.0, 270.0]]))
    assert read_pgm(path).ravel().tolist() == [11.0, 10.0, 0.0, 255.0]


def test_png_gray_and_rgb(tmp_path):
    gray = np.array([[0, 128], [64, 255]], dtype=np.uint8)
    gray_path = tmp_path / "g.png"
    Image.fromarray(gray, "L").save(gray_path)
    assert np.array_equal(load_image(gray_path), gray.astype(float))

    rgb = np.zeros((1, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (100, 150, 200)
    rgb[0, 1] = (255, 255, 255)
    rgb_path = tmp_path / "c.png"
    Image.fromarray(rgb, "RGB").save(rgb_path)
    img = load_image(rgb_path)
    # luma of (100, 150, 200) evaluated by hand: 29.9 + 88.05 + 22.8
    assert img[0, 0] == pytest.approx(140.75, abs=1e-12)
    assert img[0, 1] == 255.0


def test_rgb_to_gray_rejects_bad_shape():
    with pytest.raises(ValueError):
        rgb_to_gray(np.zeros((4, 4)))


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.pgm")


def test_unrecognized_magic(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"GIF89a notanimage")
    with pytest.raises(ImageFormatError):
        load_image(path)


def test_16bit_pgm_rejected(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_text("P2\n2 1\n65535\n0 1000\n")
    with pytest.raises(ImageFormatError):
        load_image(path)


def test_16bit_png_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.zeros((2, 2), dtype=np.uint16), "I;16").save(path)
    with pytest.raises(ImageFormatError):
        load_image(path)


def test_truncated_p5_rejected(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\nabc")
    with pytest.raises(ImageFormatError):
        load_image(path)
