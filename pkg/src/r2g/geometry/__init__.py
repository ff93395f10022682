from .bvh import Bvh, Hit, raycast
from .camera import (DepthImage, PinholeCamera, depth_to_cloud, lift_pixels,
                     look_at_pose, render_depth)
from .mesh import TriMesh, load_obj, save_obj, triangle_areas
from .pose import (Pose, SimilarityTransform, mat_to_quat, quat_angle,
                   quat_conj, quat_mul, quat_normalize, quat_rotate,
                   quat_slerp, quat_to_mat)
from .sampling import fibonacci_hemisphere

__all__ = [
    "Bvh", "DepthImage", "Hit", "PinholeCamera", "Pose", "SimilarityTransform",
    "TriMesh", "depth_to_cloud", "fibonacci_hemisphere", "lift_pixels",
    "load_obj", "look_at_pose", "mat_to_quat", "quat_angle", "quat_conj",
    "quat_mul", "quat_normalize", "quat_rotate", "quat_slerp", "quat_to_mat",
    "raycast", "render_depth", "save_obj", "triangle_areas",
]
