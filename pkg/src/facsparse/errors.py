"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Array shapes disagree with the operation's contract."""


class ZeroBasisVector(RuntimeError):
    """A sampled transformation mapped the filter entirely off the patch.

    Carries the index of the degenerate support so the caller can resample it.
    """

    def __init__(self, index, norm=0.0):
        self.index = index
        self.norm = norm
        super().__init__(
            f"basis vector {index} is numerically zero (norm={norm:.3e}); "
            "resample the support"
        )


class NonFiniteObjective(RuntimeError):
    """The inference objective or its gradient became non-finite.

    Usually indicates badly scaled data or hyperparameters.
    """


class FormatError(ValueError):
    """A file does not conform to its declared on-disk format."""


class MissingData(ValueError):
    """Fewer records are available than were requested."""
