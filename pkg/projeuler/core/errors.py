from typing import Any, Optional, Tuple


class ProjEulerError(Exception):
    """Base class of every error raised by `projeuler`."""


class ConfigError(ProjEulerError, ValueError):
    """An experiment, scheme or model configuration is invalid."""


class AdmissibilityError(ConfigError):
    """The step size lies outside the admissible window in `strict` mode."""


class PathBudgetError(ProjEulerError, MemoryError):
    """A Brownian path would exceed the configured memory budget."""


class BlowUpError(ProjEulerError, ArithmeticError):
    """
    A numerical state became non-finite.

    `node` is the index of the first non-finite node of the trajectory,
    `stream_id` and `h` identify the Monte Carlo stream and step size when known.
    """

    def __init__(
        self,
        message: str,
        node: int,
        stream_id: Optional[int] = None,
        h: Optional[float] = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.node = node
        self.stream_id = stream_id
        self.h = h

    def __reduce__(self) -> Tuple[Any, ...]:
        # Worker processes send errors back through pickle.
        return (BlowUpError, (self.message, self.node, self.stream_id, self.h))

    def __str__(self) -> str:
        where = f"node {self.node}"
        if self.stream_id is not None:
            where += f", stream {self.stream_id}"
        if self.h is not None:
            where += f", h={self.h:g}"
        return f"{self.message} ({where})"
