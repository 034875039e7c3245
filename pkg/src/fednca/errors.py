"""Exception types shared across the package."""


class FedNcaError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(FedNcaError):
    """Invalid configuration or mismatched component setup.

    The CLI maps this (and pydantic validation errors) to exit code 1.
    """


class DataError(FedNcaError):
    """Invalid data fed to an operation (bad class index, length mismatch)."""


class FormatError(FedNcaError):
    """Malformed serialized bytes (payload frames, ciphertexts, checkpoints)."""
