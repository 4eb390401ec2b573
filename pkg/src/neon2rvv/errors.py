"""Exception hierarchy shared by all neon2rvv modules."""


class Neon2RvvError(Exception):
    """Base class; ``kind`` is a stable machine-readable tag."""

    kind = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


# neon_oracle
class UnsupportedIntrinsic(Neon2RvvError):
    kind = "unsupported-intrinsic"


class ArityMismatch(Neon2RvvError):
    kind = "arity-mismatch"


class ImmediateOutOfRange(Neon2RvvError):
    kind = "immediate-out-of-range"


# rvv_machine
class VlExceedsCapacity(Neon2RvvError):
    kind = "vl-exceeds-capacity"


class TypeMismatch(Neon2RvvError):
    kind = "type-mismatch"


class UndefinedValueRef(Neon2RvvError):
    kind = "undefined-value-ref"


class OutOfBoundsMemory(Neon2RvvError):
    kind = "out-of-bounds-memory"


class MalformedProgram(Neon2RvvError):
    kind = "malformed-program"


# recipe_engine
class UnknownIntrinsic(Neon2RvvError):
    kind = "unknown-intrinsic"


class BindingMismatch(Neon2RvvError):
    kind = "binding-mismatch"


class UnsupportedWidth(Neon2RvvError):
    kind = "unsupported-width"


# c_rewriter
class LexError(Neon2RvvError):
    kind = "lex-error"


class UnsupportedSite(Neon2RvvError):
    kind = "unsupported-site"


class UnmappableType(Neon2RvvError):
    kind = "unmappable-type"


# diff_harness
class RecipeUnsupported(Neon2RvvError):
    kind = "recipe-unsupported"
