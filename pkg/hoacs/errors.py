"""Exception hierarchy shared by every hoacs module."""


class HoacsError(Exception):
    """Base class for all library errors."""


class InvalidModuli(HoacsError, ValueError):
    pass


class NotCoprime(InvalidModuli):
    def __init__(self, a: int, b: int) -> None:
        self.pair = (a, b)
        super().__init__(f"moduli {a} and {b} are not coprime")


class ModulusTooSmall(InvalidModuli):
    def __init__(self, modulus: int) -> None:
        self.modulus = modulus
        super().__init__(f"modulus {modulus} is smaller than 2")


class OutOfRange(HoacsError, ValueError):
    pass


class ModuliMismatch(HoacsError, ValueError):
    pass


class Overflow(HoacsError, ArithmeticError):
    pass


class Underflow(HoacsError, ArithmeticError):
    pass


class DivisionByZero(HoacsError, ZeroDivisionError):
    pass


class NoModularInverse(HoacsError, ArithmeticError):
    pass


class NeedTwoKeys(HoacsError, ValueError):
    pass


class PhaseOrderError(HoacsError, RuntimeError):
    pass


class BenchIoError(HoacsError, OSError):
    pass


class BenchConfigError(HoacsError, ValueError):
    """A config file that cannot be parsed."""


class IrError(HoacsError):
    """Raised for malformed or unsupported IR."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column or 1}: {message}"
        super().__init__(message)


class IrSyntaxError(IrError):
    pass


class UseBeforeDef(IrError):
    pass


class Redefinition(IrError):
    pass


class TypeMismatch(IrError):
    pass


class UnsupportedType(IrError):
    pass


class Trap(IrError):
    """Runtime fault inside the IR interpreter (division by zero, bad intrinsic operand)."""
