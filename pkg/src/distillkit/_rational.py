from fractions import Fraction
from numbers import Rational


def as_fraction(x, name: str = "value") -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact Fraction.

    Floats are refused: every place that takes a rational needs it exact.
    """
    if isinstance(x, bool):
        raise TypeError(f"{name}: expected a rational, got bool")
    if isinstance(x, (Fraction, int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{name}: cannot parse {x!r} as a rational") from exc
    raise TypeError(f"{name}: expected int, Fraction or 'p/q' string, got {type(x).__name__}")


def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)
