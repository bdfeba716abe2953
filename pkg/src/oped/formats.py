"""On-disk formats: sinograms, 16-bit PGM images, metrics and condition reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from oped.errors import FormatError
from oped.phantom import PARITIES, Sinogram, SinogramGeometry
from oped.transform import ReconImage, pixel_centers

SINOGRAM_MAGIC = b"OPEDSG1"
PGM_MAXVAL = 65535
REPORT_COLUMNS = ("k", "mu_min", "mu_max", "cond")

PathLike = Union[str, os.PathLike]


def atomic_write(path: PathLike, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sinogram_to_bytes(s: Sinogram) -> bytes:
    g = s.geometry
    seed = "none" if s.seed is None else str(int(s.seed))
    header = f"{g.N} {g.n_d} {g.r} {g.parity} {float(s.noise_sigma)!r} {seed}\n"
    payload = np.ascontiguousarray(s.values, dtype="<f8").tobytes()
    return SINOGRAM_MAGIC + b"\n" + header.encode("ascii") + payload


def sinogram_from_bytes(data: bytes) -> Sinogram:
    first = data.find(b"\n")
    if first < 0 or data[:first] != SINOGRAM_MAGIC:
        raise FormatError(f"bad magic: expected {SINOGRAM_MAGIC!r}")
    second = data.find(b"\n", first + 1)
    if second < 0:
        raise FormatError("missing header line")
    fields = data[first + 1 : second].decode("ascii", errors="replace").split()
    if len(fields) != 6:
        raise FormatError(f"header needs 6 fields (N N_d r parity noise_sigma seed), got {len(fields)}")
    try:
        N, n_d, r = int(fields[0]), int(fields[1]), int(fields[2])
        sigma = float(fields[4])
        seed = None if fields[5] == "none" else int(fields[5])
    except ValueError as exc:
        raise FormatError(f"malformed header: {exc}") from None
    parity = fields[3]
    if parity not in PARITIES:
        raise FormatError(f"unknown parity {parity!r}")
    try:
        geometry = SinogramGeometry(N, n_d, r, parity)
    except ValueError as exc:
        raise FormatError(f"invalid geometry in header: {exc}") from None
    rows = geometry.view_count - geometry.r
    expected = rows * geometry.n_d * 8
    payload = data[second + 1 :]
    if len(payload) != expected:
        raise FormatError(f"payload has {len(payload)} bytes, expected {expected} ({rows} views x {n_d} rays x 8)")
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, geometry.n_d).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError("payload contains NaN or infinite values")
    return Sinogram(geometry, values, sigma, seed)


def write_sinogram(path: PathLike, s: Sinogram) -> None:
    atomic_write(path, sinogram_to_bytes(s))


def read_sinogram(path: PathLike) -> Sinogram:
    return sinogram_from_bytes(Path(path).read_bytes())


def image_to_pgm(img: ReconImage, window: tuple[float, float]) -> bytes:
    """Binary 16-bit PGM; values are mapped linearly from ``window`` and clamped."""
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    scaled = np.rint((img.values - lo) / (hi - lo) * PGM_MAXVAL)
    samples = np.clip(scaled, 0, PGM_MAXVAL).astype(">u2")
    samples[~img.mask] = 0
    M = img.M
    return f"P5\n{M} {M}\n{PGM_MAXVAL}\n".encode("ascii") + samples.tobytes()


def write_image(path: PathLike, img: ReconImage, window: tuple[float, float]) -> None:
    atomic_write(path, image_to_pgm(img, window))


def read_pgm(path_or_bytes) -> np.ndarray:
    data = path_or_bytes if isinstance(path_or_bytes, bytes) else Path(path_or_bytes).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise FormatError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    raw = parts[4]
    size = w * h * np.dtype(dtype).itemsize
    if len(raw) != size:
        raise FormatError(f"PGM payload has {len(raw)} bytes, expected {size}")
    return np.frombuffer(raw, dtype=dtype).reshape(h, w)


def compute_metrics(img: ReconImage, reference) -> dict:
    """Errors over the disk against ``reference.density`` at the pixel centers."""
    x, y, mask = pixel_centers(img.M)
    if img.values.shape != mask.shape:
        raise ValueError("image and reference grids differ")
    if isinstance(reference, ReconImage):
        if reference.values.shape != img.values.shape:
            raise ValueError(f"dimension mismatch: {img.values.shape} vs {reference.values.shape}")
        ref = reference.values[mask]
    else:
        ref = np.asarray(reference.density(x, y), dtype=float)[mask]
    diff = img.values[mask] - ref
    ref_norm = float(np.linalg.norm(ref))
    return {
        "rmse_inside_disk": float(np.sqrt(np.mean(diff * diff))),
        "rel_l2_inside_disk": float(np.linalg.norm(diff) / ref_norm) if ref_norm > 0 else math.inf,
        "max_abs_inside_disk": float(np.max(np.abs(diff))),
    }


def metrics_to_json(metrics: dict) -> bytes:
    return (json.dumps(metrics, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _fmt(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf"
    return repr(float(value))


def report_to_csv(report) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.per_k:
        writer.writerow([row.k, _fmt(row.mu_min), _fmt(row.mu_max), _fmt(row.cond)])
    return buf.getvalue().encode("ascii")


def report_summary(reports: Iterable) -> dict:
    entries = []
    for rep in reports:
        entries.append(
            {
                "max_condition": _fmt(rep.max_condition) if not math.isfinite(rep.max_condition) else rep.max_condition,
                "argmax_k": rep.argmax_k,
                "parameters": {
                    "N": rep.N,
                    "r": rep.r,
                    "tau": rep.tau,
                    "beta": rep.beta,
                    "convention": rep.convention,
                    "filter": rep.filter_description,
                },
                "missing_degrees": rep.missing_degrees,
                "coverage_degrees": rep.coverage_degrees,
                "failed_k": list(rep.failures),
            }
        )
    return {"reports": entries}
