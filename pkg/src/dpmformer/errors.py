"""Shared exception types."""


class ShapeError(ValueError):
    """Tensor extents or dtypes violate an operation's contract."""


class ConfigError(ValueError):
    """Invalid model/training configuration.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DataError(ValueError):
    """Dataset ingestion or pair-validation failure."""


class CheckpointError(ValueError):
    """Checkpoint file is malformed or incompatible with the model."""


class TrainingDiverged(RuntimeError):
    """Non-finite loss encountered during optimization."""

    def __init__(self, step, lr, terms):
        self.step = step
        self.lr = lr
        self.terms = dict(terms)
        super().__init__(
            f"non-finite loss at step {step} (lr={lr:.3e}): "
            + ", ".join(f"{k}={v}" for k, v in self.terms.items())
        )
