"""Exception hierarchy shared by the whole toolchain."""


class JvmparError(Exception):
    """Base class for all tool errors."""


class MalformedClassfile(JvmparError):
    """Input bytes are not a structurally valid classfile."""


class UnsupportedVersion(JvmparError):
    """Classfile major version outside the supported range."""


class InconsistentModel(JvmparError):
    """A ClassModel violates its invariants (dangling pool index, branch to a
    non-instruction boundary, ...) and cannot be emitted."""


class NoSuchMethod(JvmparError):
    pass


class AbstractMethod(JvmparError):
    """Method exists but carries no Code attribute."""


class UnsupportedOpcode(JvmparError):
    """Instruction outside the supported execution/transformation subset."""


class StackUnderflow(JvmparError):
    pass


class NonEmptyStackAtBoundary(JvmparError):
    """Operand stack not empty at a statement boundary (branch or branch
    target); the method is marked non-transformable."""


class IrregularControlFlow(JvmparError):
    """Backward branch that matches neither canonical loop layout."""


class NonCanonicalLoop(JvmparError):
    """Loop candidate whose induction pattern cannot be normalized."""


class IllegalTransform(JvmparError):
    """apply() called on a candidate without a legality certificate."""


class UnsupportedReduction(JvmparError):
    """Reduction operator or accumulator shape the code generator cannot emit."""


class CaptureFailure(JvmparError):
    """Internal consistency failure while capturing loop-body state; indicates
    a bug, not a property of the input program."""


class NoCandidates(JvmparError):
    """Autotuner invoked on a nest with no legal transformation candidate."""


class MeasurementFailure(JvmparError):
    pass


class StepBudgetExceeded(JvmparError):
    """Interpreter executed more instructions than its configured budget."""


class VmTrap(JvmparError):
    """Runtime fault surfaced by the interpreter (bounds, null, div-by-zero)."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


class NonPositiveTime(JvmparError):
    pass


class EmptyInput(JvmparError):
    pass
