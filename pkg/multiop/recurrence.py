"""Nearest-neighbour recurrences, their ray limits and the ratio-asymptotics surfaces.

The recurrence x P_n = P_{n+e_k} + b_{n,k} P_n + sum_j a_{n,j} P_{n-e_j}
is used both as an exact identity and as a construction rule.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Dict, List, Optional, Sequence, Tuple

from mpmath import mp

from .continuation import route, track_branch
from .errors import ParameterError, PoleError
from .exact import ExactPolynomial, MultiIndex, RationalLike, as_rational, lagrange_interpolate, to_mpf
from .families import Family, FamilyParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NNCoefficients:
    a: Tuple[Fraction, ...]
    b: Tuple[Fraction, ...]


def _cancelled_ratio(numerators: Sequence[Fraction], denominators: Sequence[Fraction]) -> Fraction:
    """Product of numerators over product of denominators.

    Identical factors cancel first so removable 0/0 cases such as
    (|n| + alpha_i + beta) / (|n| + n_i + alpha_i + beta) with n_i = 0 are exact.
    """
    remaining = list(denominators)
    kept = []
    for factor in numerators:
        if factor in remaining:
            remaining.remove(factor)
        else:
            kept.append(factor)
    if any(d == 0 for d in remaining):
        raise PoleError("pole in coefficient formula")
    result = Fraction(1)
    for factor in kept:
        result *= factor
    for d in remaining:
        result /= d
    return result


def jp_nn_coeffs(params: FamilyParams, n: MultiIndex) -> NNCoefficients:
    """Exact Jacobi-Piñeiro recurrence coefficients at n"""
    if params.family != Family.JACOBI_PINEIRO:
        raise ParameterError("jp_nn_coeffs needs Jacobi-Piñeiro parameters")
    params.check_index(n)
    r, alpha, beta = params.r, params.alpha, params.beta
    size = n.size

    a = []
    for j in range(r):
        nj = n[j]
        if nj == 0:
            a.append(Fraction(0))
            continue
        shifted = size + nj + alpha[j] + beta
        numerators = [Fraction(nj), nj + alpha[j], size + beta]
        denominators = [shifted + 1, shifted, shifted - 1]
        for i in range(r):
            numerators.append(size + alpha[i] + beta)
            denominators.append(size + n[i] + alpha[i] + beta)
            if i != j:
                numerators.append(nj + alpha[j] - alpha[i])
                denominators.append(nj - n[i] + alpha[j] - alpha[i])
        a.append(_cancelled_ratio(numerators, denominators))

    # the second term does not depend on k
    second_num = [size + beta] + [size + beta + alpha[i] for i in range(r)]
    second_den = [size + n[i] + beta + alpha[i] for i in range(r)]
    second = _cancelled_ratio(second_num, second_den)
    b = []
    for k in range(r):
        numerators = [size + beta + 1] + [size + beta + alpha[i] + 1 for i in range(r)]
        denominators = [size + n[k] + beta + alpha[k] + 2]
        denominators += [size + n[i] + beta + alpha[i] + 1 for i in range(r) if i != k]
        b.append(_cancelled_ratio(numerators, denominators) - second)
    return NNCoefficients(tuple(a), tuple(b))


def ml_nn_coeffs(params: FamilyParams, n: MultiIndex) -> NNCoefficients:
    """Exact multiple Laguerre recurrence coefficients at n"""
    if params.family != Family.MULTIPLE_LAGUERRE:
        raise ParameterError("ml_nn_coeffs needs multiple Laguerre parameters")
    params.check_index(n)
    r, alpha = params.r, params.alpha
    size = n.size
    a = []
    for j in range(r):
        nj = n[j]
        if nj == 0:
            a.append(Fraction(0))
            continue
        numerators = [Fraction(nj), nj + alpha[j]]
        denominators = []
        for i in range(r):
            if i != j:
                numerators.append(nj + alpha[j] - alpha[i])
                denominators.append(nj - n[i] + alpha[j] - alpha[i])
        a.append(_cancelled_ratio(numerators, denominators))
    b = tuple(size + n[k] + alpha[k] + 1 for k in range(r))
    return NNCoefficients(tuple(a), b)


def nn_coeffs(params: FamilyParams, n: MultiIndex) -> NNCoefficients:
    if params.family == Family.JACOBI_PINEIRO:
        return jp_nn_coeffs(params, n)
    if params.family == Family.MULTIPLE_LAGUERRE:
        return ml_nn_coeffs(params, n)
    raise ParameterError("recurrence coefficients are available for jp and ml families only")


def canonical_path(n: MultiIndex) -> List[int]:
    """Raise direction 0 to n_0, then direction 1 to n_1, and so on"""
    path = []
    for k, nk in enumerate(n):
        path.extend([k] * nk)
    return path


def stepline_path(n: MultiIndex) -> List[int]:
    """Raise the directions cyclically, skipping those already complete"""
    counts = [0] * n.r
    path = []
    while len(path) < n.size:
        for k in range(n.r):
            if counts[k] < n[k]:
                counts[k] += 1
                path.append(k)
    return path


class RecurrenceBuilder:
    """Memoized construction of P_m by recurrence steps.

    Polynomials off the requested path are built by lowering the largest
    coordinate first, which keeps every auxiliary index within a narrow
    band around the diagonal.
    """

    def __init__(self, params: FamilyParams):
        if params.family == Family.MEIJER_G:
            raise ParameterError("recurrence construction is available for jp and ml families only")
        self.params = params
        self.r = params.r
        self._polys: Dict[Tuple[int, ...], ExactPolynomial] = {
            MultiIndex.zero(self.r).entries: ExactPolynomial.one()
        }
        self._coeffs: Dict[Tuple[int, ...], NNCoefficients] = {}

    def coefficients(self, m: MultiIndex) -> NNCoefficients:
        if m.entries not in self._coeffs:
            self._coeffs[m.entries] = nn_coeffs(self.params, m)
        return self._coeffs[m.entries]

    def step(self, m: MultiIndex, k: int, force: bool = False) -> ExactPolynomial:
        """P_{m+e_k} = (x - b_{m,k}) P_m - sum_j a_{m,j} P_{m-e_j}"""
        target = m.raised(k)
        if not force and target.entries in self._polys:
            return self._polys[target.entries]
        coeffs = self.coefficients(m)
        current = self.get(m)
        result = current.shift() - current * coeffs.b[k]
        for j in range(self.r):
            if m[j] > 0 and coeffs.a[j] != 0:
                result = result - self.get(m.lowered(j)) * coeffs.a[j]
        self._polys[target.entries] = result
        return result

    def get(self, m: MultiIndex) -> ExactPolynomial:
        if m.entries in self._polys:
            return self._polys[m.entries]
        k = max(range(self.r), key=lambda j: (m[j], j))
        return self.step(m.lowered(k), k)

    def follow(self, path: Sequence[int]) -> ExactPolynomial:
        """Build along path from the zero index; every path step is recomputed"""
        current = MultiIndex.zero(self.r)
        for k in path:
            if not 0 <= k < self.r:
                raise ParameterError(f"path direction {k} outside 0..{self.r - 1}")
            self.step(current, k, force=True)
            current = current.raised(k)
        return self._polys[current.entries]


def build_via_recurrence(
    params: FamilyParams, n: MultiIndex, path: Optional[Sequence[int]] = None
) -> ExactPolynomial:
    """Construct P_n by |n| recurrence steps along path (0-based directions)"""
    params.check_index(n)
    path = canonical_path(n) if path is None else list(path)
    counts = [0] * params.r
    for k in path:
        if not 0 <= k < params.r:
            raise ParameterError(f"path direction {k} outside 0..{params.r - 1}")
        counts[k] += 1
    if tuple(counts) != n.entries:
        raise ParameterError(f"path reaches {tuple(counts)}, not {n}")
    return RecurrenceBuilder(params).follow(path)


def build_diagonal(params: FamilyParams, n: int) -> ExactPolynomial:
    """P_{(n,...,n)} through the stepline path"""
    index = MultiIndex.diagonal(n, params.r)
    return build_via_recurrence(params, index, stepline_path(index))


def recurrence_residual(params: FamilyParams, n: MultiIndex, k: int) -> ExactPolynomial:
    """x P_n - P_{n+e_k} - b_k P_n - sum_j a_j P_{n-e_j} with direct constructions"""
    from .families import build_polynomial

    coeffs = nn_coeffs(params, n)
    current = build_polynomial(params, n)
    result = current.shift() - build_polynomial(params, n.raised(k)) - current * coeffs.b[k]
    for j in range(params.r):
        if n[j] > 0:
            result = result - build_polynomial(params, n.lowered(j)) * coeffs.a[j]
    return result


@dataclass(frozen=True)
class LimitData:
    family: Family
    q: Tuple[Fraction, ...]
    a_limit: Tuple[Fraction, ...]
    b_limit: Tuple[Fraction, ...]
    p: Optional[Fraction] = None
    s: Optional[Fraction] = None

    @property
    def r(self) -> int:
        return len(self.q)

    def interpolation_values(self) -> List[Fraction]:
        """Values A(b_j) = a_j * prod_{i != j} (b_j - b_i) written in closed form"""
        r = self.r
        if self.family == Family.JACOBI_PINEIRO:
            return [(self.p * qj / (1 + qj)) ** (r + 1) for qj in self.q]
        return [qj ** (r + 1) for qj in self.q]


def _check_ray(q: Sequence[RationalLike]) -> Tuple[Fraction, ...]:
    q = tuple(as_rational(v) for v in q)
    if not q:
        raise ParameterError("ray needs at least one entry")
    if any(v <= 0 for v in q):
        raise ParameterError("ray entries must be positive")
    if sum(q) != 1:
        raise ParameterError(f"ray entries must sum to 1, got {sum(q)}")
    if len(set(q)) != len(q):
        raise ParameterError("ray entries must be distinct; use diagonal_surface for the diagonal")
    return q


def jp_limit_coeffs(q: Sequence[RationalLike]) -> LimitData:
    q = _check_ray(q)
    r = len(q)
    p = Fraction(1)
    for qk in q:
        p /= 1 + qk
    s = r + 1 - sum(Fraction(1) / (1 + qk) for qk in q)
    a, b = [], []
    for j, qj in enumerate(q):
        value = p * qj ** (r + 1) / (1 + qj) ** 3
        for i, qi in enumerate(q):
            if i != j:
                value /= qj - qi
        a.append(value)
        b.append(p * (s - 1 / (1 + qj)))
    return LimitData(Family.JACOBI_PINEIRO, q, tuple(a), tuple(b), p, s)


def ml_limit_coeffs(q: Sequence[RationalLike]) -> LimitData:
    q = _check_ray(q)
    r = len(q)
    a = []
    for j, qj in enumerate(q):
        value = qj ** (r + 1)
        for i, qi in enumerate(q):
            if i != j:
                value /= qj - qi
        a.append(value)
    b = tuple(1 + qj for qj in q)
    return LimitData(Family.MULTIPLE_LAGUERRE, q, tuple(a), b)


def ray_index(q: Sequence[RationalLike], n: int) -> MultiIndex:
    return MultiIndex(tuple(floor(as_rational(qj) * n) for qj in q))


def scaled_nn_coeffs(params: FamilyParams, q: Sequence[RationalLike], n: int) -> NNCoefficients:
    """Coefficients at the ray index divided by the family scaling (1 for jp, n^2 and n for ml)"""
    coeffs = nn_coeffs(params, ray_index(q, n))
    if params.family == Family.JACOBI_PINEIRO:
        return coeffs
    return NNCoefficients(
        tuple(a / n ** 2 for a in coeffs.a),
        tuple(b / n for b in coeffs.b),
    )


def limit_errors(params: FamilyParams, q: Sequence[RationalLike], ns: Sequence[int]) -> List[Tuple[int, float, float]]:
    """(n, max_j |a_{n,j} - a_j|, max_j |b_{n,j} - b_j|) along the ray q"""
    limits = jp_limit_coeffs(q) if params.family == Family.JACOBI_PINEIRO else ml_limit_coeffs(q)
    rows = []
    for n in ns:
        coeffs = scaled_nn_coeffs(params, q, n)
        a_err = max(abs(x - y) for x, y in zip(coeffs.a, limits.a_limit))
        b_err = max(abs(x - y) for x, y in zip(coeffs.b, limits.b_limit))
        rows.append((n, float(a_err), float(b_err)))
    return rows


@dataclass(frozen=True)
class LimitSurface:
    """The curve (z - x) B(z) + A(z) = 0 of the ratio asymptotics"""

    family: Family
    A: ExactPolynomial
    B: ExactPolynomial
    diagonal: bool
    centers: Tuple[Fraction, ...]
    support_end: Optional[Fraction] = None

    @property
    def r(self) -> int:
        return self.B.degree

    def equation(self) -> Tuple[ExactPolynomial, ExactPolynomial]:
        """(X, Z) with the curve written as x X(z) = Z(z)"""
        return self.B, self.B.shift() + self.A

    def residual(self, z, x):
        return (z - x) * _mp_polyval(self.B, z) + _mp_polyval(self.A, z)

    def residual_dz(self, z, x):
        return (
            _mp_polyval(self.B, z)
            + (z - x) * _mp_polyval(self.B.derivative(), z)
            + _mp_polyval(self.A.derivative(), z)
        )

    def residual_dx(self, z, x):
        return -_mp_polyval(self.B, z)


def _mp_polyval(p: ExactPolynomial, z):
    acc = mp.mpf(0)
    for c in reversed(p.coeffs):
        acc = acc * z + to_mpf(c)
    return acc


def build_surface(limits: LimitData) -> LimitSurface:
    """Lagrange interpolation of A through the residue conditions, B = prod (z - b_j)"""
    centers = limits.b_limit
    if len(set(centers)) != len(centers):
        raise ParameterError("coincident b_j: use diagonal_surface")
    A = lagrange_interpolate(centers, limits.interpolation_values())
    B = ExactPolynomial.from_roots(centers)
    support_end = Fraction(1) if limits.family == Family.JACOBI_PINEIRO else None
    return LimitSurface(limits.family, A, B, False, tuple(centers), support_end)


def residues(surface: LimitSurface) -> List[Fraction]:
    """A(b_j) / prod_{i != j} (b_j - b_i) for each centre"""
    values = []
    for j, bj in enumerate(surface.centers):
        denominator = Fraction(1)
        for i, bi in enumerate(surface.centers):
            if i != j:
                denominator *= bj - bi
        values.append(surface.A(bj) / denominator)
    return values


def diagonal_constants(r: int, family: Family) -> Tuple[Fraction, Fraction]:
    """(centre, shift) with the diagonal curve x (z - centre)^r = (z - shift)^(r+1)"""
    if r < 1:
        raise ParameterError("r must be positive")
    if family == Family.JACOBI_PINEIRO:
        p = Fraction(r, r + 1) ** r
        return p, p * r / (r + 1)
    if family == Family.MULTIPLE_LAGUERRE:
        return Fraction(r + 1, r), Fraction(1)
    raise ParameterError("diagonal surfaces exist for jp and ml families only")


def diagonal_surface(r: int, family: Family) -> LimitSurface:
    """Taylor-coalescence form of A when every b_j meets at one centre"""
    centre, shift = diagonal_constants(r, family)
    z = ExactPolynomial.x()
    around_centre = z - centre
    if family == Family.JACOBI_PINEIRO:
        p = centre
        s = Fraction(2 * r + 1, r + 1)
        A = (z - shift) ** (r + 1) - around_centre ** (r + 1) - around_centre ** r * ((r + 1) * p * (2 - s))
        support_end = Fraction(1)
    else:
        A = (z - 1) ** (r + 1) - around_centre ** (r + 1) - around_centre ** r * centre
        support_end = Fraction((r + 1) ** (r + 1), r ** r) / r
    B = around_centre ** r
    return LimitSurface(family, A, B, True, (centre,) * r, support_end)


def diagonal_target(r: int, family: Family) -> Tuple[ExactPolynomial, ExactPolynomial]:
    """The simplified diagonal curve as (X, Z): x (z - centre)^r = (z - shift)^(r+1)"""
    centre, shift = diagonal_constants(r, family)
    z = ExactPolynomial.x()
    return (z - centre) ** r, (z - shift) ** (r + 1)


def solve_z(x, surface: LimitSurface, bits: int = 128):
    """Branch of the surface with z(x) - x -> 0 at infinity, by path continuation"""
    with mp.workprec(bits):
        legs = route(x, surface.support_end)
        return track_branch(
            surface.residual,
            surface.residual_dz,
            surface.residual_dx,
            legs,
            seed=lambda start: start,
            bits=bits,
            label="SURFACE",
        )
