"""Patch-based grayscale image denoising.

Pipeline: extract all overlapping p x p patches of the noisy image, sparse
code each patch over a trained dictionary with error-bounded OMP
(eps = eps_gain * sigma), reassemble the patch estimates by overlap
averaging, and clamp to [0, 255] once at the end.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .exceptions import FormatError, InvalidInputError
from .sparse_coding import omp_batch

__all__ = [
    "GrayImage",
    "DenoiseConfig",
    "load_pgm",
    "save_pgm",
    "add_gaussian_noise",
    "extract_patches",
    "reconstruct_from_patches",
    "overcomplete_dct",
    "denoise_image",
]


@dataclass
class GrayImage:
    """Grayscale image; pixel values are float64 and may leave [0, 255]
    during processing (storage clamps)."""

    pixels: np.ndarray  # (height, width)

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise InvalidInputError("pixels must be a nonempty 2-D array")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class DenoiseConfig:
    """Parameters of the denoiser."""

    sigma: float
    patch_size: int = 8
    stride: int = 1
    eps_gain: float = 8.5
    s_max: int | None = None  # defaults to patch_size**2

    def validate(self) -> None:
        p = self.patch_size
        if p < 1:
            raise InvalidInputError("patch_size must be positive")
        if not (1 <= self.stride <= p):
            raise InvalidInputError("require 1 <= stride <= patch_size")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        if self.eps_gain < 0:
            raise InvalidInputError("eps_gain must be nonnegative")
        if self.s_max is not None and not (1 <= self.s_max <= p * p):
            raise InvalidInputError("require 1 <= s_max <= patch_size**2")


_PGM_HEADER = re.compile(rb"^P5\s(?:#.*\s)*(\d+)\s(?:#.*\s)*(\d+)\s(?:#.*\s)*(\d+)\s")


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM with maxval 255."""
    with open(path, "rb") as fh:
        blob = fh.read()
    m = _PGM_HEADER.match(blob)
    if m is None:
        raise FormatError(f"{path}: not a binary P5 PGM")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    payload = blob[m.end():]
    if len(payload) < width * height:
        raise FormatError(f"{path}: truncated pixel data")
    px = np.frombuffer(payload[:width * height], dtype=np.uint8)
    return GrayImage(px.reshape(height, width).astype(np.float64))


def save_pgm(img: GrayImage, path) -> None:
    """Write a binary (P5) PGM, clamping to [0, 255] and rounding
    half-away-from-zero."""
    px = np.clip(img.pixels, 0.0, 255.0)
    px = np.floor(px + 0.5).astype(np.uint8)  # values are nonnegative here
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(px.tobytes())


def add_gaussian_noise(img: GrayImage, sigma: float, seed: int) -> GrayImage:
    """Add i.i.d. N(0, sigma^2) to every pixel; no clamping."""
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    noisy = img.pixels + rng.normal(0.0, sigma, img.pixels.shape)
    return GrayImage(noisy)


def extract_patches(img: GrayImage, p: int, stride: int = 1) -> np.ndarray:
    """All p x p windows at offsets (r*stride, c*stride), one column each.

    Patches are vectorized column-major; column order is row offset major,
    then column offset. Returns a (p*p, n_patches) matrix.
    """
    px = img.pixels
    H, W = px.shape
    if p > min(H, W):
        raise InvalidInputError("patch size exceeds image dimensions")
    if stride < 1:
        raise InvalidInputError("stride must be positive")
    win = np.lib.stride_tricks.sliding_window_view(px, (p, p))[::stride, ::stride]
    R, C = win.shape[:2]
    # transpose the patch axes so a C-order reshape yields the column-major
    # vectorization of each window
    cols = win.transpose(0, 1, 3, 2).reshape(R * C, p * p)
    return np.ascontiguousarray(cols.T)


def reconstruct_from_patches(patches: np.ndarray, width: int, height: int,
                             p: int, stride: int = 1) -> GrayImage:
    """Overlap-average patch estimates back into an image.

    Every output pixel is the arithmetic mean of all patch estimates covering
    it; pixels covered by no patch (possible for stride > 1) are set to 0.
    """
    patches = np.asarray(patches, dtype=np.float64)
    R = (height - p) // stride + 1
    C = (width - p) // stride + 1
    if patches.ndim != 2 or patches.shape != (p * p, R * C):
        raise InvalidInputError(
            f"expected a ({p * p}, {R * C}) patch matrix, got {patches.shape}")
    sums = np.zeros((height, width))
    counts = np.zeros((height, width))
    for j in range(p):
        for i in range(p):
            vals = patches[i + j * p].reshape(R, C)
            rows = slice(i, i + R * stride, stride)
            cols = slice(j, j + C * stride, stride)
            sums[rows, cols] += vals
            counts[rows, cols] += 1.0
    covered = counts > 0
    out = np.zeros((height, width))
    out[covered] = sums[covered] / counts[covered]
    return GrayImage(out)


def overcomplete_dct(p: int, K: int) -> np.ndarray:
    """Separable overcomplete DCT dictionary of size (p*p, K), K = q*q.

    The 1-D base is q sampled cosines of length p, v_k[i] = cos(pi*k*i/q),
    mean-subtracted for k > 0 and normalized; atoms are all q^2 outer
    products, vectorized consistently with extract_patches. Atom index is
    k*q + l for the (row frequency k, column frequency l) pair.
    """
    if p < 1 or K < 1:
        raise InvalidInputError("p and K must be positive")
    q = int(round(np.sqrt(K)))
    if q * q != K:
        raise InvalidInputError("K must be a perfect square")
    if q < p:
        raise InvalidInputError("require sqrt(K) >= p")
    i = np.arange(p)
    V = np.empty((q, p))
    for k in range(q):
        v = np.cos(np.pi * k * i / q)
        if k > 0:
            v = v - v.mean()
        V[k] = v / np.linalg.norm(v)
    D = np.empty((p * p, K))
    for k in range(q):
        for l in range(q):
            D[:, k * q + l] = np.outer(V[k], V[l]).flatten(order="F")
    # outer products of unit vectors are unit-norm; renormalize anyway to
    # pin down the invariant against rounding
    D /= np.linalg.norm(D, axis=0)
    return D


def sample_training_patches(images: list[GrayImage], n: int, p: int,
                            seed: int) -> np.ndarray:
    """Draw n random p x p patches from a clean corpus.

    Each patch comes from an image chosen with probability proportional to
    its area (with replacement), at a uniform top-left offset. Returns a
    (p*p, n) matrix with the same vectorization as extract_patches.
    """
    if not images:
        raise InvalidInputError("empty corpus")
    for img in images:
        if p > min(img.height, img.width):
            raise InvalidInputError("patch size exceeds a corpus image")
    rng = np.random.default_rng(seed)
    areas = np.array([img.height * img.width for img in images], dtype=float)
    picks = rng.choice(len(images), size=n, p=areas / areas.sum())
    out = np.empty((p * p, n))
    for t in range(n):
        img = images[picks[t]]
        r = rng.integers(0, img.height - p + 1)
        c = rng.integers(0, img.width - p + 1)
        out[:, t] = img.pixels[r:r + p, c:c + p].flatten(order="F")
    return out


def denoise_image(noisy: GrayImage, D: np.ndarray, cfg: DenoiseConfig,
                  threads: int = 1) -> GrayImage:
    """Denoise via per-patch error-bounded OMP and overlap averaging."""
    cfg.validate()
    p = cfg.patch_size
    D = np.asarray(D, dtype=np.float64)
    if D.shape[0] != p * p:
        raise InvalidInputError(
            f"dictionary rows {D.shape[0]} != patch dimension {p * p}")
    s_max = cfg.s_max if cfg.s_max is not None else p * p
    eps = cfg.eps_gain * cfg.sigma
    patches = extract_patches(noisy, p, cfg.stride)
    X = omp_batch(patches, D, eps=eps, s_max=s_max, threads=threads)
    estimates = D @ X.to_csc()
    rec = reconstruct_from_patches(np.asarray(estimates), noisy.width,
                                   noisy.height, p, cfg.stride)
    return GrayImage(np.clip(rec.pixels, 0.0, 255.0))
