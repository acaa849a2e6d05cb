"""Image- and embedding-space comparison metrics.

Implements the three baselines from first principles: multi-scale structural
similarity over grayscale image pairs, the Fréchet distance between Gaussian
fits of embedding sets, and cosine image-text alignment. Embeddings are
ingested from CSV/JSON files; no neural encoders run here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .errors import (
    CSEvalError,
    DimensionMismatch,
    ImageTooSmall,
    NotPSD,
    NotSymmetric,
    SchemaError,
    TooFewImages,
    TooFewVectors,
    ZeroVector,
)

# Standard MS-SSIM parameterization: 11x11 Gaussian window, sigma 1.5,
# K1/K2 stabilizers on the [0, 1] dynamic range, five scale weights.
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
C1 = 0.01 ** 2
C2 = 0.03 ** 2
SCALE_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])

PSD_EIGENVALUE_TOL = -1e-8
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image with row-major intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise DimensionMismatch(f"image must be 2-D and non-empty, got shape {px.shape}")
        if not np.isfinite(px).all() or px.min() < 0.0 or px.max() > 1.0:
            raise CSEvalError("pixel intensities must be finite and within [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def load_gray_image(path: str | Path) -> GrayImage:
    """Load an 8- or 16-bit grayscale PNG/PGM, rescaled by its max code value."""
    from PIL import Image

    try:
        with Image.open(path) as img:
            mode = img.mode
            arr = np.asarray(img)
    except (OSError, ValueError) as exc:
        raise SchemaError(f"cannot read image {path}: {exc}") from exc
    if mode == "L":
        scale = 255.0
    elif mode in ("I", "I;16", "I;16B", "I;16L"):
        scale = 65535.0
    else:
        raise CSEvalError(f"unsupported image mode {mode!r} (grayscale only): {path}")
    return GrayImage(arr.astype(np.float64) / scale)


def _gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return w / w.sum()


def _filter_valid(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    # separable Gaussian, valid region only
    out = convolve2d(img, window[None, :], mode="valid")
    return convolve2d(out, window[:, None], mode="valid")


def _ssim_terms(a: np.ndarray, b: np.ndarray, window: np.ndarray) -> tuple[float, float]:
    """Mean contrast-structure term and mean full SSIM over the valid region."""
    mu1 = _filter_valid(a, window)
    mu2 = _filter_valid(b, window)
    mu1_sq, mu2_sq, mu1_mu2 = mu1 * mu1, mu2 * mu2, mu1 * mu2
    sigma1_sq = _filter_valid(a * a, window) - mu1_sq
    sigma2_sq = _filter_valid(b * b, window) - mu2_sq
    sigma12 = _filter_valid(a * b, window) - mu1_mu2
    cs_map = (2.0 * sigma12 + C2) / (sigma1_sq + sigma2_sq + C2)
    luminance_map = (2.0 * mu1_mu2 + C1) / (mu1_sq + mu2_sq + C1)
    return float(cs_map.mean()), float((luminance_map * cs_map).mean())


def _downsample(img: np.ndarray) -> np.ndarray:
    # dyadic 2x2 mean low-pass; trailing odd row/column dropped
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    img = img[:h, :w]
    return (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2]) / 4.0


def _scale_count(height: int, width: int) -> int:
    side = min(height, width)
    if side < WINDOW_SIZE:
        raise ImageTooSmall(
            f"image {height}x{width} smaller than the {WINDOW_SIZE}x{WINDOW_SIZE} window"
        )
    scales = 1
    while scales < len(SCALE_WEIGHTS) and side // 2 >= WINDOW_SIZE:
        side //= 2
        scales += 1
    return scales


def ms_ssim(a: GrayImage, b: GrayImage) -> float:
    """Multi-scale SSIM between two equal-size grayscale images.

    Standard five-scale form: contrast-structure terms at every scale,
    luminance only at the coarsest, weighted geometric mean. Images too
    small for five scales use fewer scales with renormalized weights.
    """
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatch(
            f"image sizes differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )
    scales = _scale_count(a.height, a.width)
    weights = SCALE_WEIGHTS[:scales]
    if scales < len(SCALE_WEIGHTS):
        weights = weights / weights.sum()

    window = _gaussian_window()
    x, y = a.pixels, b.pixels
    score = 1.0
    for level in range(scales):
        cs, ssim_full = _ssim_terms(x, y, window)
        if level < scales - 1:
            score *= max(cs, 0.0) ** weights[level]
            x, y = _downsample(x), _downsample(y)
        else:
            score *= max(ssim_full, 0.0) ** weights[level]
    return float(score)


def pairwise_ms_ssim(images: list[GrayImage]) -> tuple[float, float]:
    """Mean and population std of MS-SSIM over all unordered image pairs."""
    if len(images) < 2:
        raise TooFewImages(f"need at least 2 images, got {len(images)}")
    values = []
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            values.append(ms_ssim(images[i], images[j]))
    arr = np.array(values)
    return float(arr.mean()), float(arr.std())


# --- Fréchet distance over embedding Gaussians --------------------------------

@dataclass(frozen=True)
class GaussianStats:
    """Sample mean and covariance of an embedding set."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(
                f"mean of dim {mean.shape} incompatible with cov {cov.shape}"
            )
        if self.n < 2:
            raise TooFewVectors(f"need n >= 2 samples, got {self.n}")
        _check_symmetric(cov)
        _check_psd(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return int(self.mean.size)


def gaussian_stats(vectors: np.ndarray) -> GaussianStats:
    """Fit mean and unbiased (n-1) covariance to a set of row vectors."""
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D (n, dim) array, got shape {arr.shape}")
    n = arr.shape[0]
    if n < 2:
        raise TooFewVectors(f"need at least 2 vectors, got {n}")
    if not np.isfinite(arr).all():
        raise CSEvalError("embedding vectors must be finite")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, cov=cov, n=n)


def _check_symmetric(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise NotSymmetric(f"matrix asymmetry exceeds {SYMMETRY_TOL}")


def _check_psd(m: np.ndarray) -> None:
    smallest = float(np.linalg.eigvalsh(m).min())
    if smallest < PSD_EIGENVALUE_TOL:
        raise NotPSD(f"eigenvalue {smallest:.3e} below tolerance {PSD_EIGENVALUE_TOL}")


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-8, 0) are clamped to zero; anything lower raises
    NotPSD.
    """
    m = np.asarray(m, dtype=np.float64)
    _check_symmetric(m)
    eigvals, eigvecs = np.linalg.eigh(m)
    if eigvals.min() < PSD_EIGENVALUE_TOL:
        raise NotPSD(f"eigenvalue {eigvals.min():.3e} below tolerance {PSD_EIGENVALUE_TOL}")
    eigvals = np.clip(eigvals, 0.0, None)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Fréchet distance between two Gaussians.

    Uses the symmetric form trace(S1) + trace(S2) - 2 trace((S1^1/2 S2
    S1^1/2)^1/2) + |mu1 - mu2|^2, which keeps the inner matrix PSD. The
    result is clamped to be non-negative.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"stats dims differ: {a.dim} vs {b.dim}")
    root_a = matrix_sqrt_psd(a.cov)
    inner = root_a @ b.cov @ root_a
    inner = (inner + inner.T) / 2.0
    # clamp roundoff from the two matrix products before the second root
    eigvals, eigvecs = np.linalg.eigh(inner)
    if eigvals.min() < PSD_EIGENVALUE_TOL * max(1.0, float(np.abs(eigvals).max())):
        raise NotPSD(f"inner matrix eigenvalue {eigvals.min():.3e} below tolerance")
    trace_root = float(np.sqrt(np.clip(eigvals, 0.0, None)).sum())
    diff = a.mean - b.mean
    dist = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * trace_root)
    return max(dist, 0.0)


def cosine_alignment(img: np.ndarray, txt: np.ndarray) -> float:
    """Cosine similarity between an image embedding and a text embedding."""
    img = np.asarray(img, dtype=np.float64).ravel()
    txt = np.asarray(txt, dtype=np.float64).ravel()
    if img.size != txt.size:
        raise DimensionMismatch(f"embedding dims differ: {img.size} vs {txt.size}")
    norm_img = float(np.linalg.norm(img))
    norm_txt = float(np.linalg.norm(txt))
    if norm_img == 0.0 or norm_txt == 0.0:
        raise ZeroVector("cosine alignment undefined for zero-norm vectors")
    return float(img @ txt / (norm_img * norm_txt))


# --- embedding ingestion -------------------------------------------------------

def load_embeddings(path: str | Path) -> np.ndarray:
    """Load an (n, dim) embedding matrix from CSV (one vector per row) or a
    JSON array-of-arrays."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            rows = json.loads(path.read_text(encoding="utf-8"))
            arr = np.asarray(rows, dtype=np.float64)
        else:
            arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read embeddings {path}: {exc}") from exc
    if arr.ndim != 2:
        raise SchemaError(f"embeddings in {path} must form a 2-D matrix")
    return arr


def load_embedding_ref(ref: str, base_dir: str | Path | None = None) -> np.ndarray:
    """Resolve a ``path#row`` embedding reference to a single vector.

    A bare path refers to row 0.
    """
    path_part, _, row_part = ref.partition("#")
    row = 0
    if row_part:
        try:
            row = int(row_part)
        except ValueError as exc:
            raise SchemaError(f"bad embedding reference {ref!r}") from exc
    path = Path(path_part)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    matrix = load_embeddings(path)
    if not (0 <= row < matrix.shape[0]):
        raise SchemaError(f"embedding reference {ref!r} row out of range")
    return matrix[row]
