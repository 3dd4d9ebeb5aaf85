"""Certified real zeros of exact polynomials.

Isolation counts sign variations (Descartes' rule on the Moebius image of
each piece) so every reported interval holds exactly one simple zero, and
every certificate is an exact sign change at rational endpoints.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from .config import settings
from .errors import EvaluationAtZeroError, IsolationError, NumericalError, ParameterError, UndecidableError
from .exact import ExactPolynomial, MultiIndex, integer_sign, poly_eval_float, to_mpf

logger = logging.getLogger(__name__)

Enclosure = Tuple[Fraction, Fraction]
Support = Tuple[Fraction, Optional[Fraction]]

UNIT_INTERVAL: Support = (Fraction(0), Fraction(1))
HALF_LINE: Support = (Fraction(0), None)

INITIAL_PIECES = 8
# tried in order when a split point is itself a zero
SPLIT_FRACTIONS = [Fraction(1, 2), Fraction(7, 16), Fraction(9, 16), Fraction(3, 8), Fraction(5, 8)]


@dataclass(frozen=True)
class ZeroSet:
    """Sorted disjoint enclosures, one per simple real zero of polynomial"""

    polynomial: ExactPolynomial
    enclosures: Tuple[Enclosure, ...]
    scale: Fraction = Fraction(1)
    index: Optional[MultiIndex] = None
    bits: int = field(default_factory=lambda: settings.bits)

    def __len__(self) -> int:
        return len(self.enclosures)

    @property
    def midpoints(self) -> List:
        with mp.workprec(self.bits):
            return [to_mpf((a + b) / 2) for a, b in self.enclosures]

    @property
    def widths(self) -> List[Fraction]:
        return [b - a for a, b in self.enclosures]

    @property
    def scaled(self) -> List:
        with mp.workprec(self.bits):
            return [to_mpf((a + b) / 2 * self.scale) for a, b in self.enclosures]

    def with_scale(self, scale: Fraction, index: Optional[MultiIndex] = None) -> "ZeroSet":
        return ZeroSet(self.polynomial, self.enclosures, Fraction(scale), index or self.index, self.bits)

    def verify_certificates(self) -> bool:
        """Re-check every enclosure in pure rational arithmetic"""
        if len(self.enclosures) != self.polynomial.degree:
            return False
        coeffs = self.polynomial.integer_form()
        previous_upper = None
        for a, b in self.enclosures:
            if not a < b:
                return False
            if previous_upper is not None and a < previous_upper:
                return False
            if integer_sign(coeffs, a) * integer_sign(coeffs, b) >= 0:
                return False
            previous_upper = b
        return True


def sign_variations(coeffs: Sequence[int]) -> int:
    variations = 0
    last = 0
    for c in coeffs:
        if c == 0:
            continue
        if last and (c > 0) != (last > 0):
            variations += 1
        last = c
    return variations


def _taylor_shift_one(coeffs: List[int]) -> List[int]:
    """Coefficients of q(y + 1) from those of q(y), ascending"""
    a = list(coeffs)
    n = len(a) - 1
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += a[j + 1]
    return a


def _affine_image(coeffs: Sequence[int], left: Fraction, width: Fraction) -> List[int]:
    """Integer coefficients proportional to p(left + width*y)"""
    common = lcm(left.denominator, width.denominator)
    shift = int(left * common)
    slope = int(width * common)
    acc = [coeffs[-1]]
    power = 1
    for c in reversed(coeffs[:-1]):
        power *= common
        nxt = [0] * (len(acc) + 1)
        for i, v in enumerate(acc):
            nxt[i] += v * shift
            nxt[i + 1] += v * slope
        nxt[0] += c * power
        acc = nxt
    return acc


def descartes_bound(coeffs: Sequence[int], left: Fraction, right: Fraction) -> int:
    """Sign variations bounding the number of zeros in (left, right); exact when 0 or 1"""
    image = _affine_image(coeffs, left, right - left)
    return sign_variations(_taylor_shift_one(list(reversed(image))))


def root_bound(p: ExactPolynomial) -> Fraction:
    """Fujiwara's bound rounded up to a power of two"""
    coeffs = p.integer_form()
    d = len(coeffs) - 1
    lead = abs(coeffs[-1])
    exponent = 0
    for k in range(1, d + 1):
        c = abs(coeffs[d - k])
        if c == 0:
            continue
        if k == d:
            c = (c + 1) // 2 or 1
        # 2^e bounds c / lead from above
        e = c.bit_length() - lead.bit_length() + 1
        exponent = max(exponent, -(-e // k))
    return Fraction(2) ** (exponent + 1)


def _split_point(coeffs: Sequence[int], left: Fraction, right: Fraction) -> Fraction:
    for fraction in SPLIT_FRACTIONS:
        point = left + (right - left) * fraction
        if integer_sign(coeffs, point) != 0:
            return point
    raise IsolationError(f"isolation failed: no zero-free split point in [{left}, {right}]")


def isolate_zeros(
    p: ExactPolynomial,
    support: Support = UNIT_INTERVAL,
    max_depth: Optional[int] = None,
    bits: Optional[int] = None,
) -> ZeroSet:
    """One certified enclosure per real zero of p inside the open support"""
    if p.is_zero:
        raise ParameterError("cannot isolate the zeros of the zero polynomial")
    bits = bits or settings.bits
    max_depth = max_depth or settings.isolation_depth
    lower, upper = Fraction(support[0]), support[1]
    upper = root_bound(p) + max(Fraction(0), lower) if upper is None else Fraction(upper)
    if p.degree == 0:
        return ZeroSet(p, (), bits=bits)

    coeffs = list(p.integer_form())
    for end in (lower, upper):
        if integer_sign(coeffs, end) == 0:
            raise IsolationError(f"isolation failed: zero on the support boundary {end}")

    edges = [lower]
    for i in range(1, INITIAL_PIECES):
        point = lower + (upper - lower) * Fraction(i, INITIAL_PIECES)
        if integer_sign(coeffs, point) == 0:
            point = _split_point(coeffs, edges[-1], lower + (upper - lower) * Fraction(i + 1, INITIAL_PIECES))
        edges.append(point)
    edges.append(upper)

    found: List[Enclosure] = []
    stack = [(a, b, 0) for a, b in zip(edges, edges[1:])]
    nodes = 0
    while stack:
        a, b, depth = stack.pop()
        nodes += 1
        count = descartes_bound(coeffs, a, b)
        if count == 0:
            continue
        if count == 1:
            found.append((a, b))
            continue
        if depth >= max_depth:
            raise IsolationError(
                f"isolation failed: subdivision budget of {max_depth} exhausted near [{float(a)}, {float(b)}]"
            )
        m = _split_point(coeffs, a, b)
        stack.append((m, b, depth + 1))
        stack.append((a, m, depth + 1))

    found.sort()
    if len(found) != p.degree:
        raise IsolationError(
            f"isolation failed: found {len(found)} zeros for degree {p.degree} in [{lower}, {upper}]"
        )
    for a, b in found:
        if integer_sign(coeffs, a) * integer_sign(coeffs, b) >= 0:
            raise IsolationError(f"isolation failed: no sign change on [{a}, {b}]")
    logger.debug(f"[ZEROS] isolated {len(found)} zeros with {nodes} Descartes tests")
    return ZeroSet(p, tuple(found), bits=bits)


def _midpoint_sign(p: ExactPolynomial, coeffs: Sequence[int], x: Fraction, bits: int) -> int:
    sign = poly_eval_float(p, x, bits).sign
    if sign is None or sign == 0:
        return integer_sign(coeffs, x)
    return sign


def refine(zeros: ZeroSet, tol: Optional[float] = None) -> ZeroSet:
    """Bisect every enclosure until its width is at most tol*max(1, |midpoint|)"""
    tol = Fraction(tol if tol is not None else settings.tol)
    if tol <= 0:
        raise ParameterError("refinement tolerance must be positive")
    p = zeros.polynomial
    coeffs = p.integer_form()
    refined = []
    for a, b in zeros.enclosures:
        left_sign = integer_sign(coeffs, a)
        while b - a > tol * max(1, abs((a + b) / 2)):
            m = (a + b) / 2
            sign = _midpoint_sign(p, coeffs, m, zeros.bits)
            if sign == 0:
                delta = min((b - a) / 4, tol * max(1, abs(m)) / 4)
                a, b = m - delta, m + delta
                break
            if sign == left_sign:
                a = m
            else:
                b = m
        refined.append((a, b))
    return ZeroSet(p, tuple(refined), zeros.scale, zeros.index, zeros.bits)


def _compare(lo: Enclosure, hi: Enclosure) -> Optional[bool]:
    """True if lo lies strictly below hi, False if strictly above, None if they overlap"""
    if lo[1] < hi[0]:
        return True
    if hi[1] < lo[0]:
        return False
    return None


def interlacing_check(z1: ZeroSet, z2: ZeroSet, rounds: int = 12) -> bool:
    """True iff exactly one zero of z1 lies strictly between consecutive zeros of z2"""
    if len(z2) != len(z1) + 1:
        raise ParameterError(f"interlacing needs degrees N and N+1, got {len(z1)} and {len(z2)}")
    if len(z1) == 0:
        return True

    tol = Fraction(settings.tol)
    for _ in range(rounds):
        undecided = False
        for i, x in enumerate(z1.enclosures):
            for below, above in ((z2.enclosures[i], x), (x, z2.enclosures[i + 1])):
                decision = _compare(below, above)
                if decision is False:
                    return False
                if decision is None:
                    undecided = True
        if not undecided:
            return True
        tol /= 2 ** 16
        z1, z2 = refine(z1, float(tol)), refine(z2, float(tol))
    raise UndecidableError(f"undecidable at precision: enclosures still overlap at tolerance {float(tol):.3g}")


class EmpiricalCDF:
    """Right-continuous step CDF of a finite sample with uniform weights"""

    def __init__(self, points: Sequence):
        self.points = np.sort(np.asarray([float(p) for p in points], dtype=float))

    def __len__(self) -> int:
        return len(self.points)

    def __call__(self, x: float) -> float:
        if len(self.points) == 0:
            return 0.0
        return float(np.searchsorted(self.points, x, side="right")) / len(self.points)

    def left_limit(self, x: float) -> float:
        if len(self.points) == 0:
            return 0.0
        return float(np.searchsorted(self.points, x, side="left")) / len(self.points)


def empirical_cdf(zeros: ZeroSet) -> EmpiricalCDF:
    return EmpiricalCDF(zeros.scaled)


def ks_distance(empirical: EmpiricalCDF, cdf: Callable[[float], float]) -> float:
    """Sup distance between a step CDF and a continuous CDF, checked at both sides of every jump"""
    distance = 0.0
    for x in np.unique(empirical.points):
        value = float(cdf(float(x)))
        distance = max(distance, abs(value - empirical(x)), abs(value - empirical.left_limit(x)))
    return distance


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _complex_horner(p: ExactPolynomial, x):
    acc = mp.mpc(0)
    for c in reversed(p.coeffs):
        acc = acc * x + to_mpf(c)
    return acc


def _settled(evaluate: Callable, bits: int, accuracy=mp.mpf("1e-20")):
    """Evaluate at bits and 2*bits, doubling until the two agree to the given relative accuracy"""
    max_bits = settings.max_bits
    with mp.workprec(bits):
        previous = evaluate()
    while bits * 2 <= max_bits:
        bits *= 2
        with mp.workprec(bits):
            current = evaluate()
            if abs(current - previous) <= accuracy * abs(current):
                return current
        previous = current
    raise NumericalError(f"evaluation did not settle below {max_bits} bits")


def log_derivative(p: ExactPolynomial, x, scale=Fraction(1), bits: Optional[int] = None):
    """(1/(scale*N)) p'(x/scale)/p(x/scale), the Stieltjes transform of the scaled zero counting measure.

    Exact Fraction for rational x, mpc otherwise.
    """
    if p.degree < 1:
        raise ParameterError("log-derivative needs a polynomial of positive degree")
    scale = Fraction(scale)
    derivative = p.derivative()
    n = p.degree
    if _is_exact(x):
        point = Fraction(x) / scale
        value = p(point)
        if value == 0:
            raise EvaluationAtZeroError(f"evaluation at a zero: p({point}) = 0")
        return derivative(point) / (value * n * scale)

    def evaluate():
        point = mp.mpc(x) / to_mpf(scale)
        value = _complex_horner(p, point)
        if value == 0:
            raise EvaluationAtZeroError(f"evaluation at a zero: p({point}) = 0")
        return _complex_horner(derivative, point) / (value * n * to_mpf(scale))

    return _settled(evaluate, bits or settings.bits)


def ratio_at(p_next: ExactPolynomial, p: ExactPolynomial, x, bits: Optional[int] = None):
    """p_next(x)/p(x), exact for rational x"""
    if _is_exact(x):
        value = p(Fraction(x))
        if value == 0:
            raise EvaluationAtZeroError(f"evaluation at a zero: p({x}) = 0")
        return p_next(Fraction(x)) / value

    def evaluate():
        point = mp.mpc(x)
        value = _complex_horner(p, point)
        if value == 0:
            raise EvaluationAtZeroError(f"evaluation at a zero: p({point}) = 0")
        return _complex_horner(p_next, point) / value

    return _settled(evaluate, bits or settings.bits)
