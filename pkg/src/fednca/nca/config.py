"""Model hyperparameters for the two-stage NCA."""

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters shared by both NCA stages.

    ``channels`` is the total state width: ``c_in`` image channels,
    ``c_out`` logit channels (one per class), and the rest hidden.
    ``t0``/``t1`` are the coarse/fine step counts; zero is allowed so tests
    can disable a stage, production configs should keep both >= 1.
    """

    channels: int = 16
    c_in: int = 1
    c_out: int = 2
    hidden_units: int = 64
    t0: int = 20
    t1: int = 40
    fire_rate: float = 0.5
    downscale_factor: int = 4
    eta: float = 1e-3
    # Divide each stage's accumulated weight gradient by its step count
    # instead of plain summation over the unrolled steps.
    step_grad_mean: bool = False

    def __post_init__(self):
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigError("c_in and c_out must be >= 1")
        if self.channels < self.c_in + self.c_out + 1:
            raise ConfigError(
                f"channels={self.channels} must leave at least one hidden "
                f"channel beyond c_in+c_out={self.c_in + self.c_out}"
            )
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be >= 1")
        if self.t0 < 0 or self.t1 < 0:
            raise ConfigError("t0 and t1 must be >= 0")
        if not 0.0 <= self.fire_rate <= 1.0:
            raise ConfigError("fire_rate must lie in [0, 1]")
        if self.downscale_factor < 1:
            raise ConfigError("downscale_factor must be >= 1")
        if self.eta <= 0.0:
            raise ConfigError("eta must be > 0")

    @property
    def perception_channels(self) -> int:
        """Identity plus two gradient filters per state channel."""
        return 3 * self.channels

    @property
    def c_hidden(self) -> int:
        return self.channels - self.c_in - self.c_out
