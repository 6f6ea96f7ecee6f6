"""Exception hierarchy shared by every module."""


class MNARError(Exception):
    """Base class for all estimator errors."""


class ShapeError(MNARError, ValueError):
    pass


class ConfigError(MNARError, ValueError):
    pass


class NumericalError(MNARError, ArithmeticError):
    """A numeric failure: singular systems, divergence, ill-posed weights."""


class SingularFitError(NumericalError):
    pass


class IllPosedWeightingError(NumericalError):
    pass


class IllConditionedBlockError(NumericalError):
    """A block update has a nonpositive (or near-zero) denominator."""

    def __init__(self, block, index, value):
        self.block = block
        self.index = int(index)
        self.value = float(value)
        super().__init__(
            f"{block} block denominator for node {self.index} is {self.value:.6g}; "
            "increase the ridge penalty or drop the node"
        )


class StationarityError(NumericalError):
    pass
