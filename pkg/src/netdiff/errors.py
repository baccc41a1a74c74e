"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed in-memory data: wrong shape, non-binary entries, bad labels."""


class LoadError(FormatError):
    """Malformed input file; the message names the offending file and row."""


class SamplerError(RuntimeError):
    """Non-finite state or other unrecoverable failure inside the sampler."""
