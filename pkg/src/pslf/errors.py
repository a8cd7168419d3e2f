"""Exception hierarchy shared by the library and the command-line harness."""


class PslfError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PslfError, ValueError):
    pass


class DataError(PslfError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class DuplicateEntryError(DataError):
    def __init__(self, user, item):
        self.user = user
        self.item = item
        super().__init__(f"duplicate rating for (user={user!r}, item={item!r})")


class DimensionError(PslfError, ValueError):
    pass


class EvaluationError(PslfError, ValueError):
    pass


class NumericError(PslfError, ArithmeticError):
    pass


class SolverError(NumericError):
    """Conjugate gradient hit non-positive or non-finite curvature."""

    def __init__(self, iteration, message, epoch=None):
        self.iteration = iteration
        self.epoch = epoch
        where = f"CG iteration {iteration}"
        if epoch is not None:
            where = f"epoch {epoch}, " + where
        super().__init__(f"{where}: {message}")


class DivergenceError(NumericError):
    def __init__(self, epoch, message="training diverged (non-finite RMSE)"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class OracleError(PslfError, ValueError):
    pass


class GridSearchError(PslfError, RuntimeError):
    def __init__(self, failures):
        self.failures = failures
        super().__init__(f"all {len(failures)} grid points failed")
