"""Closed-form 7-DoF least-squares registration and its RANSAC wrapper."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (AlignmentFailedError, DegenerateConfigurationError,
                      InvalidArgumentError)
from ..geometry import SimilarityTransform, mat_to_quat

_SINGULAR_EPS = 1e-12
_SAMPLE_AREA_EPS = 1e-8  # m^2, collinearity gate for minimal samples


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched 3D point pairs, sorted by descending descriptor similarity."""

    source: np.ndarray
    target: np.ndarray
    similarity: np.ndarray

    def __post_init__(self):
        src = np.array(self.source, dtype=np.float64).reshape(-1, 3)
        tgt = np.array(self.target, dtype=np.float64).reshape(-1, 3)
        sim = np.array(self.similarity, dtype=np.float64).reshape(-1)
        if not (len(src) == len(tgt) == len(sim)):
            raise InvalidArgumentError("source/target/similarity lengths differ")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(tgt))):
            raise InvalidArgumentError("non-finite correspondence coordinates")
        order = np.argsort(-sim, kind="stable")
        for name, arr in (("source", src[order]), ("target", tgt[order]),
                          ("similarity", sim[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.similarity)


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 500
    inlier_threshold: float = 0.01  # meters
    min_inliers: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        if self.inlier_threshold <= 0:
            raise InvalidArgumentError("inlier_threshold must be positive")
        if self.min_inliers < 3:
            raise InvalidArgumentError("min_inliers must be >= 3")


def umeyama(source: np.ndarray, target: np.ndarray) -> SimilarityTransform:
    """Least-squares (scale, rotation, translation) mapping source onto target.

    Minimizes mean ||target_i - (s R source_i + t)||^2 via the SVD of the
    cross-covariance with determinant-sign correction, so det(R) = +1.
    """
    src = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(src) != len(tgt):
        raise InvalidArgumentError("source and target must have equal lengths")
    if len(src) < 3:
        raise InvalidArgumentError("need at least 3 point pairs")
    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    x = src - mu_s
    y = tgt - mu_t
    cov = y.T @ x / len(src)
    u, d, vt = np.linalg.svd(cov)
    if d[1] < _SINGULAR_EPS and d[2] < _SINGULAR_EPS:
        raise DegenerateConfigurationError("source points are (near-)collinear")
    s_diag = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s_diag[2] = -1.0
    rot = u @ np.diag(s_diag) @ vt
    var_s = float((x * x).sum() / len(src))
    if var_s < _SINGULAR_EPS:
        raise DegenerateConfigurationError("source points coincide")
    scale = float((d * s_diag).sum() / var_s)
    if scale <= 0:
        raise DegenerateConfigurationError("non-positive scale solution")
    trans = mu_t - scale * rot @ mu_s
    return SimilarityTransform(scale, mat_to_quat(rot), trans)


def _triangle_area(p: np.ndarray) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0])))


def _sample_distinct_3(rng: np.random.Generator, n: int) -> tuple[int, int, int]:
    # rejection over rng.integers keeps the stream portable across numpy versions
    i = int(rng.integers(0, n))
    j = int(rng.integers(0, n))
    while j == i:
        j = int(rng.integers(0, n))
    k = int(rng.integers(0, n))
    while k == i or k == j:
        k = int(rng.integers(0, n))
    return i, j, k


def ransac_umeyama(correspondences: CorrespondenceSet, params: RansacParams
                   ) -> tuple[SimilarityTransform, np.ndarray]:
    """Robust 7-DoF fit: best consensus over minimal samples, refit on inliers.

    Deterministic for a given (correspondences, params.seed). Raises
    AlignmentFailedError when no model reaches min_inliers or the refit's mean
    inlier residual is not below the inlier threshold.
    """
    n = len(correspondences)
    if n < params.min_inliers:
        raise InvalidArgumentError(
            f"need at least min_inliers={params.min_inliers} pairs, got {n}")
    src = correspondences.source
    tgt = correspondences.target
    rng = np.random.default_rng(params.seed)
    best_count = -1
    best_residual = np.inf
    best_inliers: np.ndarray | None = None
    for _ in range(params.iterations):
        i, j, k = _sample_distinct_3(rng, n)
        sample = src[[i, j, k]]
        if _triangle_area(sample) <= _SAMPLE_AREA_EPS:
            continue
        try:
            model = umeyama(sample, tgt[[i, j, k]])
        except DegenerateConfigurationError:
            continue
        err = np.linalg.norm(tgt - model.apply(src), axis=1)
        mask = err < params.inlier_threshold
        count = int(mask.sum())
        if count < params.min_inliers:
            continue
        residual = float(err[mask].mean())
        if count > best_count or (count == best_count and residual < best_residual):
            best_count = count
            best_residual = residual
            best_inliers = np.nonzero(mask)[0]
    if best_inliers is None:
        raise AlignmentFailedError(
            f"no consensus with >= {params.min_inliers} inliers "
            f"in {params.iterations} iterations")
    refit = umeyama(src[best_inliers], tgt[best_inliers])
    mean_residual = float(
        np.linalg.norm(tgt[best_inliers] - refit.apply(src[best_inliers]), axis=1).mean())
    if mean_residual >= params.inlier_threshold:
        raise AlignmentFailedError(
            f"refit residual {mean_residual:.4g} m exceeds threshold "
            f"{params.inlier_threshold:.4g} m")
    return refit, best_inliers
