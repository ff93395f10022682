"""Exception hierarchy shared across the toolkit."""


class R2GError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(R2GError, ValueError):
    """A caller-supplied value violates a precondition."""


class DegenerateConfigurationError(R2GError):
    """Point configuration too degenerate to fit a transform (e.g. collinear)."""


class InsufficientCorrespondencesError(R2GError):
    """Fewer than three liftable correspondence pairs."""


class AlignmentFailedError(R2GError):
    """No consensus transform passed the inlier / residual gates."""


class EmptyGraspSetError(R2GError):
    """No antipodal grasp found on a mesh; mesh unusable for generation."""


class SceneSamplingFailedError(R2GError):
    """Rejection-sampling budget for a collision-free scene exhausted."""


class GraspFailureError(R2GError):
    """No feasible grasp, or the fingers closed on air."""


class PathCollisionError(R2GError):
    """A planned gripper path intersects the world."""

    def __init__(self, message: str, segment: int):
        super().__init__(message)
        self.segment = segment


class GenerationStalledError(R2GError):
    """Demonstration generation success fraction fell below the floor."""


class MalformedArchiveError(R2GError):
    """Episode archive header or payload is corrupt."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedVersionError(R2GError):
    """Episode archive written by an unknown format version."""


class ProtocolError(R2GError):
    """Stepping wire protocol violation."""

    def __init__(self, message: str, episode: int | None = None):
        if episode is not None:
            message = f"{message} (episode {episode})"
        super().__init__(message)
        self.episode = episode
