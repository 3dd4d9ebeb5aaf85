"""Exact rational kernels.

Polynomials with Fraction coefficients, multi-indices, normalized moment
ratios of the Jacobi and Laguerre weights, fraction-free linear solves and
rigorous interval evaluation for sign pre-screening.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from mpmath import iv, mp

from .config import settings
from .errors import IndeterminateSignError, ParameterError, SingularSystemError

logger = logging.getLogger(__name__)

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(value: RationalLike) -> Fraction:
    """Convert ints, Fractions and strings like "1/3" or "0.25" to a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError(f"not an exact rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"not an exact rational: {value!r}") from exc
    raise ParameterError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class MultiIndex:
    """The index (n_1, ..., n_r) of a multiple orthogonal polynomial"""

    entries: Tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise ParameterError("multi-index needs at least one entry")
        if any(e < 0 for e in entries):
            raise ParameterError(f"multi-index entries must be nonnegative: {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zero(cls, r: int) -> "MultiIndex":
        return cls((0,) * r)

    @classmethod
    def diagonal(cls, n: int, r: int) -> "MultiIndex":
        return cls((n,) * r)

    @classmethod
    def stepline(cls, n: int, r: int) -> "MultiIndex":
        """Index of size n reached by raising directions 0, 1, ..., r-1 cyclically"""
        q, extra = divmod(n, r)
        return cls(tuple(q + (1 if j < extra else 0) for j in range(r)))

    @property
    def size(self) -> int:
        return sum(self.entries)

    @property
    def r(self) -> int:
        return len(self.entries)

    def raised(self, k: int) -> "MultiIndex":
        entries = list(self.entries)
        entries[k] += 1
        return MultiIndex(tuple(entries))

    def lowered(self, k: int) -> "MultiIndex":
        if self.entries[k] == 0:
            raise ParameterError(f"cannot lower direction {k} of {self}")
        entries = list(self.entries)
        entries[k] -= 1
        return MultiIndex(tuple(entries))

    def __getitem__(self, k: int) -> int:
        return self.entries[k]

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __str__(self) -> str:
        return "(" + ",".join(str(e) for e in self.entries) + ")"


@dataclass(frozen=True)
class ExactPolynomial:
    """Polynomial with Fraction coefficients in ascending powers.

    Trailing zeros are stripped on construction so the degree is the index of
    the last nonzero coefficient; the zero polynomial has degree -1.
    """

    coeffs: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        coeffs = [as_rational(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def constant(cls, value: RationalLike) -> "ExactPolynomial":
        return cls((as_rational(value),))

    @classmethod
    def one(cls) -> "ExactPolynomial":
        return cls((Fraction(1),))

    @classmethod
    def x(cls) -> "ExactPolynomial":
        return cls((Fraction(0), Fraction(1)))

    @classmethod
    def from_roots(cls, roots: Iterable[RationalLike]) -> "ExactPolynomial":
        result = cls.one()
        for root in roots:
            result = result.shift() - result * as_rational(root)
        return result

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    @property
    def is_monic(self) -> bool:
        return self.leading == 1

    def __call__(self, x: RationalLike) -> Fraction:
        return poly_eval_exact(self, as_rational(x))

    def __neg__(self) -> "ExactPolynomial":
        return ExactPolynomial(tuple(-c for c in self.coeffs))

    def __add__(self, other) -> "ExactPolynomial":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        size = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (size - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (size - len(other.coeffs))
        return ExactPolynomial(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __sub__(self, other) -> "ExactPolynomial":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "ExactPolynomial":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other) -> "ExactPolynomial":
        if isinstance(other, ExactPolynomial):
            if self.is_zero or other.is_zero:
                return ExactPolynomial()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return ExactPolynomial(tuple(out))
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ExactPolynomial(tuple(c * other for c in self.coeffs))
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "ExactPolynomial":
        if exponent < 0:
            raise ParameterError("negative polynomial power")
        result = ExactPolynomial.one()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def shift(self) -> "ExactPolynomial":
        """x * p"""
        if self.is_zero:
            return self
        return ExactPolynomial((Fraction(0),) + self.coeffs)

    def derivative(self) -> "ExactPolynomial":
        return ExactPolynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def monic(self) -> "ExactPolynomial":
        if self.is_zero:
            raise ParameterError("the zero polynomial has no monic normalization")
        lead = self.leading
        return ExactPolynomial(tuple(c / lead for c in self.coeffs))

    def substitute(self, a: RationalLike, b: RationalLike = 0) -> "ExactPolynomial":
        """p(a*x + b)"""
        linear = ExactPolynomial((as_rational(b), as_rational(a)))
        result = ExactPolynomial()
        for c in reversed(self.coeffs):
            result = result * linear + c
        return result

    def integer_form(self) -> Tuple[int, ...]:
        """Content-free integer coefficients with the same sign as p everywhere"""
        if self.is_zero:
            return ()
        scale = lcm(*(c.denominator for c in self.coeffs))
        ints = [int(c * scale) for c in self.coeffs]
        content = gcd(*ints)
        return tuple(v // content for v in ints)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for power in range(self.degree, -1, -1):
            c = self.coeffs[power]
            if c == 0:
                continue
            monomial = "" if power == 0 else ("x" if power == 1 else f"x^{power}")
            if monomial and abs(c) == 1:
                text = monomial
            elif monomial:
                text = f"{abs(c)}*{monomial}"
            else:
                text = str(abs(c))
            sign = "-" if c < 0 else "+"
            terms.append((sign, text))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in terms[1:]:
            out += f" {sign} {text}"
        return out


def _coerce(value) -> Optional[ExactPolynomial]:
    if isinstance(value, ExactPolynomial):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return ExactPolynomial.constant(value)
    return None


def poly_eval_exact(p: ExactPolynomial, x: Fraction) -> Fraction:
    """Horner evaluation over the rationals"""
    acc = Fraction(0)
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def integer_sign(coeffs: Sequence[int], x: Fraction) -> int:
    """Exact sign of an integer-coefficient polynomial at a rational point.

    Evaluates v^d * p(u/v) with integer Horner steps, so no gcd is ever taken.
    """
    if not coeffs:
        return 0
    u, v = x.numerator, x.denominator
    acc = coeffs[-1]
    v_power = 1
    for c in reversed(coeffs[:-1]):
        v_power *= v
        acc = acc * u + c * v_power
    return (acc > 0) - (acc < 0)


@dataclass(frozen=True)
class FloatEvaluation:
    """A big-float value with a rigorous enclosure [lower, upper]"""

    lower: object
    upper: object
    bits: int

    @property
    def value(self):
        with mp.workprec(self.bits + 10):
            return (self.lower + self.upper) / 2

    @property
    def radius(self):
        with mp.workprec(self.bits + 10):
            return (self.upper - self.lower) / 2

    @property
    def sign(self) -> Optional[int]:
        if self.lower > 0:
            return 1
        if self.upper < 0:
            return -1
        if self.lower == 0 and self.upper == 0:
            return 0
        return None

    def contains(self, value: RationalLike) -> bool:
        """Whether the exact rational value lies in the enclosure"""
        return mpf_to_fraction(self.lower) <= as_rational(value) <= mpf_to_fraction(self.upper)

    def require_sign(self) -> int:
        sign = self.sign
        if sign is None:
            raise IndeterminateSignError(f"indeterminate sign at {self.bits} bits", self.bits)
        return sign


@contextmanager
def interval_precision(bits: int):
    """Temporarily set the working precision of the interval context"""
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


def to_mpf(value: RationalLike):
    """Round an exact rational to the current mpmath working precision"""
    value = as_rational(value)
    return mp.mpf(value.numerator) / value.denominator


def mpf_to_fraction(value) -> Fraction:
    """Exact rational value of a finite mpf"""
    man, exp = value.man_exp
    return Fraction(man) * Fraction(2) ** exp


def _to_interval(value):
    if isinstance(value, Fraction):
        return iv.mpf(value.numerator) / iv.mpf(value.denominator)
    if isinstance(value, int):
        return iv.mpf(value)
    return iv.mpf(value)


def poly_eval_float(p: ExactPolynomial, x, bits: int = 53) -> FloatEvaluation:
    """Interval Horner evaluation at `bits` of precision.

    The returned enclosure always contains the exact value of p(x); the
    caller decides whether its sign is settled (see FloatEvaluation.sign).
    """
    if bits < 53:
        raise ParameterError("floating evaluation needs at least 53 bits")
    with interval_precision(bits):
        xi = _to_interval(x)
        acc = iv.mpf(0)
        for c in reversed(p.coeffs):
            acc = acc * xi + _to_interval(c)
        low, high = acc._mpi_
    return FloatEvaluation(lower=mp.make_mpf(low), upper=mp.make_mpf(high), bits=bits)


def poly_eval_escalated(
    p: ExactPolynomial, x, bits: int = 53, max_bits: Optional[int] = None
) -> FloatEvaluation:
    """Double the precision until the sign of p(x) is decided"""
    max_bits = max_bits or settings.max_bits
    while True:
        evaluation = poly_eval_float(p, x, bits)
        if evaluation.sign is not None:
            return evaluation
        if bits * 2 > max_bits:
            raise IndeterminateSignError(f"indeterminate sign up to {bits} bits", bits)
        bits *= 2


def beta_moment_ratio(a: RationalLike, beta: RationalLike, m: int) -> Fraction:
    """B(a+m+1, beta+1) / B(a+1, beta+1) as an exact product"""
    return beta_moments(a, beta, m)[m]


def beta_moments(a: RationalLike, beta: RationalLike, count: int) -> List[Fraction]:
    """Normalized Jacobi-weight moments for m = 0..count"""
    a, beta = as_rational(a), as_rational(beta)
    if a <= -1:
        raise ParameterError(f"moment exponent must exceed -1, got {a}")
    if beta <= -1:
        raise ParameterError(f"beta must exceed -1, got {beta}")
    if count < 0:
        raise ParameterError("moment order must be nonnegative")
    moments = [Fraction(1)]
    for i in range(1, count + 1):
        moments.append(moments[-1] * (a + i) / (a + beta + 1 + i))
    return moments


def gamma_moment_ratio(a: RationalLike, m: int) -> Fraction:
    """Gamma(a+m+1) / Gamma(a+1) as an exact product"""
    return gamma_moments(a, m)[m]


def gamma_moments(a: RationalLike, count: int) -> List[Fraction]:
    """Normalized Laguerre-weight moments for m = 0..count"""
    a = as_rational(a)
    if a <= -1:
        raise ParameterError(f"moment exponent must exceed -1, got {a}")
    if count < 0:
        raise ParameterError("moment order must be nonnegative")
    moments = [Fraction(1)]
    for i in range(1, count + 1):
        moments.append(moments[-1] * (a + i))
    return moments


def generalized_binomial(top: RationalLike, k: int) -> Fraction:
    """binom(top, k) for rational top as a falling-factorial ratio"""
    top = as_rational(top)
    result = Fraction(1)
    for i in range(k):
        result = result * (top - i) / (i + 1)
    return result


def solve_exact(matrix: Sequence[Sequence[RationalLike]], rhs: Sequence[RationalLike]) -> List[Fraction]:
    """Solve a square rational system by fraction-free (Bareiss) elimination"""
    n = len(matrix)
    if len(rhs) != n or any(len(row) != n for row in matrix):
        raise ParameterError("linear system must be square")
    rows = []
    for row, b in zip(matrix, rhs):
        entries = [as_rational(v) for v in row] + [as_rational(b)]
        scale = lcm(*(e.denominator for e in entries))
        rows.append([int(e * scale) for e in entries])

    previous = 1
    for k in range(n):
        pivot = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if pivot is None:
            raise SingularSystemError(f"singular system: no pivot in column {k} of {n}")
        if pivot != k:
            rows[k], rows[pivot] = rows[pivot], rows[k]
        head = rows[k]
        for i in range(k + 1, n):
            row = rows[i]
            factor = row[k]
            for j in range(k + 1, n + 1):
                row[j] = (row[j] * head[k] - factor * head[j]) // previous
            row[k] = 0
        previous = head[k]

    solution = [Fraction(0)] * n
    for i in reversed(range(n)):
        acc = Fraction(rows[i][n])
        for j in range(i + 1, n):
            acc -= rows[i][j] * solution[j]
        solution[i] = acc / rows[i][i]
    return solution


def lagrange_interpolate(points: Sequence[RationalLike], values: Sequence[RationalLike]) -> ExactPolynomial:
    """The polynomial of degree < len(points) through (points[j], values[j])"""
    points = [as_rational(p) for p in points]
    values = [as_rational(v) for v in values]
    if len(set(points)) != len(points):
        raise ParameterError("interpolation points must be distinct")
    result = ExactPolynomial()
    for j, (xj, yj) in enumerate(zip(points, values)):
        basis = ExactPolynomial.one()
        denominator = Fraction(1)
        for i, xi in enumerate(points):
            if i == j:
                continue
            basis = basis.shift() - basis * xi
            denominator *= xj - xi
        result = result + basis * (yj / denominator)
    return result
