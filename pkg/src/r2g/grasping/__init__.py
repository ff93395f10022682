from .antipodal import Grasp, GripperModel, antipodal_pairs, grasp_frame
from .collision import (CLEARANCE, OrientedBox, box_triangles_overlap,
                        closing_corridor, grasp_collision_free,
                        gripper_boxes, gripper_collides)
from .sampling import SurfaceSample, outward_triangle_normals, sample_surface
from .store import (GraspConfig, GraspSet, load_grasps, precompute_grasps,
                    save_grasps)

__all__ = [
    "CLEARANCE", "Grasp", "GraspConfig", "GraspSet", "GripperModel",
    "OrientedBox", "SurfaceSample", "antipodal_pairs", "box_triangles_overlap",
    "closing_corridor", "grasp_collision_free", "grasp_frame", "gripper_boxes",
    "gripper_collides", "load_grasps", "outward_triangle_normals",
    "precompute_grasps", "sample_surface", "save_grasps",
]
