"""Flow-matching imitation policy over R2G demonstration archives."""

__version__ = "0.1.0"


class PolicyError(Exception):
    pass


class ShapeError(PolicyError):
    """Observation or action tensor has the wrong shape."""


class NoDataError(PolicyError):
    """Dataset root contains no episodes."""


class InferenceError(PolicyError):
    """Model produced non-finite output during integration."""


class ProtocolError(PolicyError):
    """Stepping protocol violation."""

    def __init__(self, message, episode=None):
        if episode is not None:
            message = f"{message} (episode {episode})"
        super().__init__(message)
        self.episode = episode
