class DDRError(Exception):
    """Base class for errors raised by the solver."""


class DegenerateElement(DDRError):
    pass


class DegenerateCut(DDRError):
    pass


class TopologyError(DDRError):
    pass


class IllConditioned(DDRError):
    pass


class SolveFailure(DDRError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class Instability(DDRError):
    pass
