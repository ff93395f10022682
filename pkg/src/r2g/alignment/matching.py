"""View selection by descriptor similarity and 3D correspondence lifting."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientCorrespondencesError, InvalidArgumentError
from ..geometry import lift_pixels
from .descriptors import DescriptorSet
from .umeyama import CorrespondenceSet
from .views import ReferenceObservation, ViewBundle


def score_views(views: list[ViewBundle], reference: DescriptorSet, k: int
                ) -> tuple[int, list[float]]:
    """Pick the view whose descriptors match the reference best.

    Per view, each reference descriptor is matched to its nearest view
    descriptor by cosine similarity; the view score is the mean of the top-k
    match similarities. Ties go to the lowest view_index.
    """
    if not views:
        raise InvalidArgumentError("views list is empty")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    ref = reference.unit_rows()
    scores = []
    for view in views:
        if len(view.descriptors) < k:
            raise InvalidArgumentError(
                f"view {view.view_index} has {len(view.descriptors)} descriptors, needs >= {k}")
        sim = ref @ view.descriptors.unit_rows().T
        best_per_ref = sim.max(axis=1)
        top = np.sort(best_per_ref)[::-1][: min(k, len(best_per_ref))]
        scores.append(float(top.mean()))
    order = sorted(range(len(views)), key=lambda i: views[i].view_index)
    best = max(order, key=lambda i: scores[i])  # max() keeps the earliest on ties
    return best, scores


def build_correspondences(best: ViewBundle, reference: ReferenceObservation,
                          k: int) -> CorrespondenceSet:
    """Lift the top-k mutual descriptor matches to 3D on both sides.

    Source points live in the render (canonical mesh) frame, targets in the
    demonstration (metric) frame. Matches over missing depth are skipped.
    """
    ref = reference.descriptors.unit_rows()
    view = best.descriptors.unit_rows()
    sim = ref @ view.T
    ref_to_view = sim.argmax(axis=1)
    view_to_ref = sim.argmax(axis=0)
    mutual = [i for i in range(len(ref)) if view_to_ref[ref_to_view[i]] == i]
    mutual.sort(key=lambda i: -sim[i, ref_to_view[i]])
    mutual = mutual[:k]

    src_pts, src_idx = lift_pixels(
        best.camera, best.depth,
        [best.descriptors.keypoints[ref_to_view[i]] for i in mutual])
    liftable = set(src_idx.tolist())
    tgt_pts, tgt_idx = lift_pixels(
        reference.camera, reference.depth,
        [reference.descriptors.keypoints[i] for i in mutual])
    liftable &= set(tgt_idx.tolist())
    if len(liftable) < 3:
        raise InsufficientCorrespondencesError(
            f"only {len(liftable)} liftable correspondence pairs (need >= 3)")
    keep = sorted(liftable)
    src_map = {int(i): p for i, p in zip(src_idx, src_pts)}
    tgt_map = {int(i): p for i, p in zip(tgt_idx, tgt_pts)}
    return CorrespondenceSet(
        source=np.array([src_map[i] for i in keep]),
        target=np.array([tgt_map[i] for i in keep]),
        similarity=np.array([sim[mutual[i], ref_to_view[mutual[i]]] for i in keep]),
    )
