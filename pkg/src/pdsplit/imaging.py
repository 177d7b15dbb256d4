"""Blur model, noise and test images for the deblurring experiments.

Images are 2-D ``float64`` arrays of shape ``(height, width)`` in row-major
order; as vectors they are ``img.ravel()``. Pixel values are unconstrained
internally and clamped to [0, 1] only when written to disk.

The blur is a 2-D correlation with a normalized Gaussian kernel under
half-sample symmetric boundary handling: the sample beyond the edge repeats
the edge pixel (index -1 -> 0, -2 -> 1, width -> width-1, ...). With a
symmetric kernel the resulting operator is self-adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .linops import LinearMap

__all__ = [
    "BlurSpec",
    "GaussianBlur",
    "gaussian_kernel",
    "blur_apply",
    "add_gaussian_noise",
    "synthetic_blobs",
    "read_pgm",
    "write_pgm",
]


@dataclass(frozen=True)
class BlurSpec:
    kernel_size: int = 9
    std: float = 4.0
    boundary: str = "symmetric"

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be an odd positive integer")
        if not self.std > 0:
            raise ValueError("std must be positive")
        if self.boundary != "symmetric":
            raise ValueError("only the 'symmetric' boundary is supported")


def gaussian_kernel(spec):
    """Gaussian kernel ``exp(-(i^2 + j^2) / (2 std^2))`` on a centered grid, unit sum."""
    r = np.arange(spec.kernel_size) - (spec.kernel_size - 1) / 2.0
    h = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * spec.std ** 2))
    return h / h.sum()


def blur_apply(spec, img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("image must be a non-empty 2-D array")
    # scipy's "reflect" is the half-sample symmetric extension (d c b a | a b c d)
    return ndimage.correlate(img, gaussian_kernel(spec), mode="reflect")


class GaussianBlur(LinearMap):
    """Self-adjoint blur acting on vectorized ``(height, width)`` images.

    The declared ``norm_bound`` of 1 is exact: every row of the matrix is
    nonnegative and sums to 1, and the matrix is symmetric, so both the
    1- and inf-norms equal 1.
    """

    def __init__(self, height, width, spec=BlurSpec()):
        n = int(height) * int(width)
        super().__init__(n, n, norm_bound=1.0)
        self.height = int(height)
        self.width = int(width)
        self.spec = spec
        self.kernel = gaussian_kernel(spec)

    def _apply(self, x):
        img = x.reshape(self.height, self.width)
        return ndimage.correlate(img, self.kernel, mode="reflect").ravel()

    def _adjoint(self, y):
        return self._apply(y)


def add_gaussian_noise(img, std, seed):
    """Add i.i.d. ``N(0, std^2)`` noise.

    Samples come from ``numpy.random.Generator(Philox(seed)).standard_normal``
    (a counter-based bit generator), so a seed reproduces the same noise on
    every platform.
    """
    img = np.asarray(img, dtype=np.float64)
    if std < 0:
        raise ValueError("std must be nonnegative")
    if std == 0:
        return img.copy()
    rng = np.random.Generator(np.random.Philox(seed))
    return img + std * rng.standard_normal(img.shape)


def synthetic_blobs(width, height, n_blobs=12, seed=0):
    """Binary image of seeded random filled ellipses (a piecewise-constant test image)."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    img = np.zeros((height, width))
    if n_blobs <= 0:
        return img
    rng = np.random.Generator(np.random.Philox(seed))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    rmax_x = max(2.0, width / 6.0)
    rmax_y = max(2.0, height / 6.0)
    for _ in range(n_blobs):
        cx = rng.uniform(0, width)
        cy = rng.uniform(0, height)
        a = rng.uniform(1.5, rmax_x)
        b = rng.uniform(1.5, rmax_y)
        theta = rng.uniform(0, np.pi)
        dx, dy = xx - cx, yy - cy
        u = dx * np.cos(theta) + dy * np.sin(theta)
        v = -dx * np.sin(theta) + dy * np.cos(theta)
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] = 1.0
    return img


def _pgm_tokens(data):
    """Yield (token, end_offset) for the PGM header, skipping comments."""
    pos = 0
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        yield data[start:pos], pos


def read_pgm(path):
    """Read a binary (P5) PGM, 8- or 16-bit, scaled linearly to [0, 1]."""
    data = Path(path).read_bytes()
    tokens = _pgm_tokens(data)
    magic, _ = next(tokens)
    if magic != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width = int(next(tokens)[0])
    height = int(next(tokens)[0])
    tok, end = next(tokens)
    maxval = int(tok)
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = data[end + 1:end + 1 + width * height * dtype.itemsize]
    if len(raster) != width * height * dtype.itemsize:
        raise ValueError(f"{path}: truncated raster")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_pgm(path, img, bits=8):
    """Write a P5 PGM; values are clamped to [0, 1] and rounded."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    maxval = 255 if bits == 8 else 65535
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval)
    raster = q.astype(np.uint8 if bits == 8 else ">u2").tobytes()
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(raster)
