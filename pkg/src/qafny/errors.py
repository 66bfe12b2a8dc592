"""Exception hierarchy shared by every stage of the toolchain.

Each family carries the process exit code the CLI reports for it:
1 for parse errors, 2 for kind and type errors, 3 for runtime errors
and 4 for failed checks.
"""


class QafnyError(Exception):
    exit_code = 3


# -- parsing ---------------------------------------------------------------

class ParseError(QafnyError):
    exit_code = 1

    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            msg = f"{line}:{col}: {msg}"
        super().__init__(msg)


class DuplicateDeclaration(ParseError):
    pass


# -- kinds -----------------------------------------------------------------

class KindError(QafnyError):
    exit_code = 2


class UnboundVariable(KindError):
    pass


class OverlappingQuantumOperands(KindError):
    pass


class RangeOutOfBounds(KindError):
    pass


class OverlappingLoci(KindError):
    pass


# -- types -----------------------------------------------------------------

class QTypeError(QafnyError):
    exit_code = 2


class CloneViolation(QTypeError):
    pass


class MeasureInQuantumConditional(QTypeError):
    pass


class TypeMismatch(QTypeError):
    pass


class UnboundLocus(QTypeError):
    pass


class NotASubtype(QTypeError):
    pass


class SymbolicBound(QTypeError):
    pass


class FreshnessViolation(QTypeError):
    pass


class NonNeutralShiftUnderCU(QTypeError):
    pass


class BasisMismatch(QTypeError):
    pass


# -- runtime ---------------------------------------------------------------

class NotSeparable(QafnyError):
    pass


class WidthMismatch(QafnyError):
    pass


class EmptyStack(QafnyError):
    pass


class ForcedOutcomeImpossible(QafnyError):
    pass


class IllFormedState(QafnyError):
    pass


class OracleError(QafnyError):
    pass


class UnsupportedOracleLowering(QafnyError):
    pass


class ControlTargetOverlap(QafnyError):
    pass


class IncompleteCoverage(QafnyError):
    pass


class NonEmptyStack(QafnyError):
    pass


class DimensionMismatch(QafnyError):
    pass


class IllFormedPredicate(QafnyError):
    pass


class NonLiteralPrecondition(QafnyError):
    pass


# -- checks ----------------------------------------------------------------

class CheckFailure(QafnyError):
    exit_code = 4
