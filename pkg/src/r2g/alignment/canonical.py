"""Turning an aligned mesh into a simulation-ready metric mesh."""

from __future__ import annotations

from ..errors import InvalidArgumentError
from ..geometry import SimilarityTransform, TriMesh, quat_rotate


def canonicalize_mesh(mesh: TriMesh, transform: SimilarityTransform,
                      scale_correction: float = 1.0) -> TriMesh:
    """Apply the estimated scale and rotation about the mesh centroid, then
    re-center: centroid on the z-axis, lowest vertex at z = 0.

    The transform's translation is discarded; placement comes from scene
    sampling, not from where the object sat in the demonstration.
    """
    if scale_correction <= 0:
        raise InvalidArgumentError("scale_correction must be positive")
    centered = mesh.vertices - mesh.centroid
    v = scale_correction * transform.scale * quat_rotate(transform.rotation, centered)
    v = v - [v[:, 0].mean(), v[:, 1].mean(), v[:, 2].min()]
    return TriMesh(v, mesh.triangles, mesh.id)


def relative_scale_error(estimated: float, reference: float) -> float:
    """Signed relative deviation (estimated - reference) / reference."""
    if reference <= 0:
        raise InvalidArgumentError("reference scale must be positive")
    return (estimated - reference) / reference
