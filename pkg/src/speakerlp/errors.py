"""Exception hierarchy shared across the package."""


class SpeakerLpError(Exception):
    """Base class for all errors raised by speakerlp."""


class ConfigError(SpeakerLpError):
    """A configuration value failed validation."""


class ManifestError(SpeakerLpError):
    """A dataset file (manifest, payload, or split) is malformed."""


class DatasetError(SpeakerLpError):
    """A dataset violates a structural invariant (roles, labels, shapes)."""


class InsufficientDataError(SpeakerLpError):
    """Not enough speakers or utterances to satisfy a sampling request."""


class IsolatedNodeError(SpeakerLpError):
    """A graph node ended up with zero degree (all edge weights underflowed)."""


class ScoringError(SpeakerLpError):
    """A scorer could not produce scores (zero-norm embedding or centroid)."""


class PropagationError(SpeakerLpError):
    """Label propagation hit a numeric failure (non-finite values, bad solve)."""
