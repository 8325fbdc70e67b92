import numpy as np
import pytest
from PIL import Image

from pairfeat.image_io import (
    CorruptHeaderError,
    CropBoundsError,
    CropRect,
    GrayImage,
    UnreadableFileError,
    UnsupportedBitDepthError,
    UnsupportedFormatError,
    crop,
    load_image,
    resize,
    write_pgm,
)


def write_p5(path, width, height, values, maxval=255):
    path.write_bytes(f"P5\n{width} {height}\n{maxval}\n".encode() + bytes(values))


def test_load_p5_identity(tmp_path):
    p = tmp_path / "a.pgm"
    write_p5(p, 2, 2, [0, 255, 128, 64])
    img = load_image(p)
    assert img.width == 2 and img.height == 2
    assert img.pixels.ravel().tolist() == [0, 255, 128, 64]


def test_load_p2_with_comments(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# comment line\n3 2 # trailing\n255\n0 1 2\n3 4 5\n")
    img = load_image(p)
    assert img.pixels.ravel().tolist() == [0, 1, 2, 3, 4, 5]


def test_load_png_gray_and_rgb(tmp_path):
    gray = tmp_path / "g.png"
    Image.fromarray(np.array([[5, 200]], dtype=np.uint8), "L").save(gray)
    assert load_image(gray).pixels.tolist() == [[5.0, 200.0]]

    rgb = tmp_path / "c.png"
    arr = np.zeros((1, 3, 3), dtype=np.uint8)
    arr[0, 0] = (255, 255, 255)
    arr[0, 1] = (255, 0, 0)
    arr[0, 2] = (0, 0, 0)
    Image.fromarray(arr, "RGB").save(rgb)
    img = load_image(rgb)
    # white -> 255, pure red -> round(0.299 * 255) = 76
    assert img.pixels[0].tolist() == [255.0, 76.0, 0.0]


def test_gray_conversion_idempotent_on_gray_rgb(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 256, size=(4, 5), dtype=np.uint8)
    rgb = np.stack([vals] * 3, axis=-1)
    p = tmp_path / "eq.png"
    Image.fromarray(rgb, "RGB").save(p)
    assert np.array_equal(load_image(p).pixels, vals.astype(float))


def test_load_missing_file(tmp_path):
    with pytest.raises(UnreadableFileError):
        load_image(tmp_path / "nope.pgm")


def test_load_unsupported_format(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"GIF89a not really")
    with pytest.raises(UnsupportedFormatError):
        load_image(p)


def test_load_deep_pgm_rejected(tmp_path):
    p = tmp_path / "deep.pgm"
    p.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(UnsupportedBitDepthError):
        load_image(p)


def test_load_truncated_pgm(tmp_path):
    p = tmp_path / "short.pgm"
    p.write_bytes(b"P5\n4 4\n255\n\x00\x01")
    with pytest.raises(CorruptHeaderError):
        load_image(p)


def test_load_garbled_header(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\nnot numbers here\n")
    with pytest.raises(CorruptHeaderError):
        load_image(p)


def test_load_deep_png_rejected(tmp_path):
    p = tmp_path / "deep.png"
    deep = Image.new("I;16", (2, 1))
    deep.putdata([1000, 40000])
    deep.save(p)
    with pytest.raises(UnsupportedBitDepthError):
        load_image(p)


def test_load_palette_png_rejected(tmp_path):
    p = tmp_path / "pal.png"
    Image.fromarray(np.array([[1, 2]], dtype=np.uint8), "L").convert("P").save(p)
    with pytest.raises(UnsupportedFormatError):
        load_image(p)


def test_gray_image_invariants():
    with pytest.raises(ValueError):
        GrayImage(np.array([[300.0]]))
    with pytest.raises(ValueError):
        GrayImage(np.array([1.0, 2.0]))


def test_crop_identity_and_interior():
    img = GrayImage(np.arange(16.0).reshape(4, 4))
    assert np.array_equal(crop(img, CropRect(0, 0, 4, 4)).pixels, img.pixels)
    inner = crop(img, CropRect(1, 1, 2, 2))
    assert inner.pixels.tolist() == [[5.0, 6.0], [9.0, 10.0]]


def test_crop_out_of_bounds():
    img = GrayImage(np.zeros((2, 2)))
    with pytest.raises(CropBoundsError):
        crop(img, CropRect(1, 1, 2, 2))


def test_crop_composes():
    rng = np.random.default_rng(1)
    img = GrayImage(rng.integers(0, 256, size=(12, 10)).astype(float))
    a = crop(crop(img, CropRect(2, 3, 7, 8)), CropRect(1, 2, 4, 5))
    b = crop(img, CropRect(3, 5, 4, 5))
    assert np.array_equal(a.pixels, b.pixels)


def test_resize_identity_and_constant():
    img = GrayImage(np.arange(12.0).reshape(3, 4))
    assert np.array_equal(resize(img, 4, 3).pixels, img.pixels)
    rng = np.random.default_rng(2)
    for _ in range(5):
        c = float(rng.uniform(0, 255))
        out = resize(GrayImage(np.full((3, 5), c)), 7, 2)
        assert np.allclose(out.pixels, c)


def test_resize_corner_aligned_interpolation():
    img = GrayImage(np.array([[0.0, 100.0]]))
    out = resize(img, 3, 1)
    assert out.pixels.tolist() == [[0.0, 50.0, 100.0]]


def test_resize_rejects_empty_target():
    img = GrayImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        resize(img, 0, 2)


def test_pgm_write_read_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    img = GrayImage(rng.integers(0, 256, size=(6, 9)).astype(float))
    p = tmp_path / "rt.pgm"
    write_pgm(img, p)
    assert np.array_equal(load_image(p).pixels, img.pixels)
