"""Exception types shared by both kernel backends."""


class BallViolationError(ValueError):
    """A point with Euclidean norm >= 1 was passed where a ball point is required."""


class DegeneratePairError(ValueError):
    """Distance gradient requested for a coincident pair (undefined at zero distance)."""


class DivergenceError(FloatingPointError):
    """An update produced a non-finite coordinate.

    Attributes:
        node: row index of the offending embedding vector.
    """

    def __init__(self, node: int):
        super().__init__(f"non-finite coordinate while updating node index {node}")
        self.node = node
