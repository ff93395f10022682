from .canonical import canonicalize_mesh, relative_scale_error
from .descriptors import DescriptorSet, load_descriptors, save_descriptors
from .matching import build_correspondences, score_views
from .umeyama import CorrespondenceSet, RansacParams, ransac_umeyama, umeyama
from .views import (ReferenceObservation, ViewBundle, ViewRenderConfig,
                    camera_from_json, camera_to_json, load_view_bundles,
                    render_views, write_view_manifest)

__all__ = [
    "CorrespondenceSet", "DescriptorSet", "RansacParams", "ReferenceObservation",
    "ViewBundle", "ViewRenderConfig", "build_correspondences", "camera_from_json",
    "camera_to_json", "canonicalize_mesh", "load_descriptors", "load_view_bundles",
    "ransac_umeyama", "relative_scale_error", "render_views", "save_descriptors",
    "score_views", "umeyama", "write_view_manifest",
]
