import json

import numpy as np
import pytest

from oped import (
    FilterSpec,
    FormatError,
    ReconImage,
    Sinogram,
    SinogramGeometry,
    add_noise,
    oped_evaluate,
    sample_sinogram,
    shepp_logan,
    sine_coefficients,
    unit_disk,
)
from oped.formats import (
    REPORT_COLUMNS,
    compute_metrics,
    image_to_pgm,
    read_pgm,
    read_sinogram,
    report_summary,
    report_to_csv,
    sinogram_from_bytes,
    sinogram_to_bytes,
    write_image,
    write_sinogram,
)
from oped.spectral import condition_report
from oped.transform import pixel_centers


def toy_sinogram():
    rng = np.random.default_rng(4)
    return Sinogram(SinogramGeometry(8, 4), rng.standard_normal((4, 4)), 0.25, 9)


def test_sinogram_round_trip_bit_exact(tmp_path):
    s = toy_sinogram()
    path = tmp_path / "toy.sino"
    write_sinogram(path, s)
    back = read_sinogram(path)
    assert back.geometry == s.geometry
    assert back.values.tobytes() == s.values.tobytes()
    assert (back.noise_sigma, back.seed) == (0.25, 9)
    assert sinogram_to_bytes(back) == path.read_bytes()


def test_round_trip_with_missing_views():
    s = add_noise(sample_sinogram(shepp_logan(), SinogramGeometry(64, r=5)), 0.01, 3)
    back = sinogram_from_bytes(sinogram_to_bytes(s))
    assert back.geometry.r == 5
    np.testing.assert_array_equal(back.values, s.values)


def test_payload_layout():
    s = toy_sinogram()
    data = sinogram_to_bytes(s)
    lines = data.split(b"\n", 2)
    assert lines[0] == b"OPEDSG1"
    assert lines[1].split()[:4] == [b"8", b"4", b"0", b"even_half_circle"]
    assert np.frombuffer(lines[2], "<f8").tolist() == s.values.ravel().tolist()


def test_truncated_payload():
    data = sinogram_to_bytes(toy_sinogram())
    with pytest.raises(FormatError, match=r"128.*120|120.*128"):
        sinogram_from_bytes(data[:-8])


def test_bad_magic():
    data = sinogram_to_bytes(toy_sinogram())
    with pytest.raises(FormatError, match="magic"):
        sinogram_from_bytes(b"XXXXXX1" + data[7:])


def test_nan_payload():
    data = bytearray(sinogram_to_bytes(toy_sinogram()))
    data[-8:] = np.array([np.nan], "<f8").tobytes()
    with pytest.raises(FormatError):
        sinogram_from_bytes(bytes(data))


def test_header_r_too_large():
    # r = 3 with N = 8 violates r < N/2 - 1
    with pytest.raises(FormatError):
        sinogram_from_bytes(b"OPEDSG1\n8 4 3 even_half_circle 0.0 none\n" + bytes(8 * 4))


def test_header_garbage():
    with pytest.raises(FormatError):
        sinogram_from_bytes(b"OPEDSG1\n8 4 0 sideways 0.0 none\n" + bytes(8 * 16))
    with pytest.raises(FormatError):
        sinogram_from_bytes(b"OPEDSG1\n8 4\n")


def _image(M, value):
    _, _, mask = pixel_centers(M)
    return ReconImage(np.where(mask, value, 0.0), mask)


def test_pgm_constant_one():
    img = _image(16, 1.0)
    pix = read_pgm(image_to_pgm(img, (0.0, 1.0)))
    assert pix.dtype == np.dtype(">u2")
    assert np.all(pix[img.mask] == 65535)
    assert np.all(pix[~img.mask] == 0)


def test_pgm_zero():
    pix = read_pgm(image_to_pgm(_image(16, 0.0), (0.0, 1.0)))
    assert not pix.any()


def test_pgm_header_and_clamp():
    data = image_to_pgm(_image(4, 7.0), (0.0, 1.05))
    assert data.startswith(b"P5\n4 4\n65535\n")
    assert len(data) == len(b"P5\n4 4\n65535\n") + 32
    assert read_pgm(data).max() == 65535


def test_pgm_window_validation():
    with pytest.raises(ValueError):
        image_to_pgm(_image(4, 1.0), (1.0, 1.0))


def test_pgm_deterministic(tmp_path):
    c = sine_coefficients(sample_sinogram(shepp_logan(), SinogramGeometry(64)))
    outs = []
    for i in range(2):
        img = oped_evaluate(c, FilterSpec(0.0, 0.9), 64)
        write_image(tmp_path / f"{i}.pgm", img, (0.0, 1.05))
        outs.append((tmp_path / f"{i}.pgm").read_bytes())
    assert outs[0] == outs[1]


def test_metrics_exact():
    x, y, mask = pixel_centers(32)
    ref = shepp_logan()
    img = ReconImage(np.where(mask, ref.density(x, y), 0.0), mask)
    m = compute_metrics(img, ref)
    assert m == {"rmse_inside_disk": 0.0, "rel_l2_inside_disk": 0.0, "max_abs_inside_disk": 0.0}


def test_metrics_offset():
    x, y, mask = pixel_centers(32)
    ref = shepp_logan()
    img = ReconImage(np.where(mask, ref.density(x, y) + 0.1, 0.0), mask)
    m = compute_metrics(img, ref)
    assert m["max_abs_inside_disk"] == pytest.approx(0.1, abs=1e-12)
    assert m["rmse_inside_disk"] == pytest.approx(0.1, abs=1e-12)


def test_metrics_dimension_mismatch():
    with pytest.raises(ValueError):
        compute_metrics(_image(8, 1.0), _image(16, 1.0))


def test_metrics_against_disk():
    c = sine_coefficients(sample_sinogram(unit_disk(), SinogramGeometry(16)))
    m = compute_metrics(oped_evaluate(c, FilterSpec(), 24), unit_disk())
    assert m["max_abs_inside_disk"] <= 1e-10


def test_report_csv_and_summary():
    rep = condition_report(16, 4, FilterSpec(0.5, 0.0))
    text = report_to_csv(rep).decode()
    rows = text.strip().split("\n")
    assert tuple(rows[0].split(",")) == REPORT_COLUMNS
    assert len(rows) == 9
    assert "inf" in text
    summary = report_summary([rep])
    json.dumps(summary)
    entry = summary["reports"][0]
    assert entry["max_condition"] == "inf"
    assert entry["parameters"]["r"] == 4
