from constants import EXIT_VALIDATION, EXIT_MISSING_RECORDS, EXIT_NUMERICAL


class QQLabError(Exception):
    exit_code = EXIT_VALIDATION


class NotNormalized(QQLabError):
    def __init__(self, norm: float):
        super().__init__(f'State norm {norm!r} deviates from 1')
        self.norm = norm


class ZeroState(QQLabError):
    def __init__(self):
        super().__init__('All amplitudes are zero')


class NotTraceOne(QQLabError):
    pass


class NotPSD(QQLabError):
    pass


class EmptyRecord(QQLabError):
    pass


class InconsistentTotals(QQLabError):
    pass


class DegenerateAngle(QQLabError):
    pass


class OutOfRange(QQLabError):
    pass


class MissingRecords(QQLabError):
    exit_code = EXIT_MISSING_RECORDS

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__('Missing records for: ' + ', '.join(self.missing))


class NumericalFailure(QQLabError):
    exit_code = EXIT_NUMERICAL


class OptimizerNotConverged(NumericalFailure):
    def __init__(self, best: float):
        super().__init__(f'Separable-state minimization did not converge (best bound {best!r})')
        self.best = best


class NoRoot(NumericalFailure):
    pass


class AmbiguousRoot(NumericalFailure):
    def __init__(self, roots):
        self.roots = list(roots)
        super().__init__(f'{len(self.roots)} roots satisfy the 45/135 equation')


class Degenerate(NumericalFailure):
    pass
