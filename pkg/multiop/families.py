"""Exact construction of the three polynomial families.

Jacobi-Piñeiro polynomials come from the orthogonality linear system,
multiple Laguerre polynomials from their explicit nested binomial sum and the
Meijer-G stepline polynomials from their single sum. All three are monic.
"""
import logging
from enum import Enum
from fractions import Fraction
from itertools import product
from math import factorial, perm
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ParameterError
from .exact import (
    ExactPolynomial,
    MultiIndex,
    as_rational,
    beta_moments,
    gamma_moments,
    generalized_binomial,
    solve_exact,
)

logger = logging.getLogger(__name__)


class Family(str, Enum):
    JACOBI_PINEIRO = "jp"
    MULTIPLE_LAGUERRE = "ml"
    MEIJER_G = "meijer"


class FamilyParams(BaseModel):
    """Family tag plus its exact parameters"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: Family
    r: int = Field(ge=1)
    alpha: Tuple[Fraction, ...] = ()
    beta: Optional[Fraction] = None
    nu: Tuple[int, ...] = ()

    @field_validator("alpha", mode="before")
    @classmethod
    def parse_alpha(cls, value):
        if value is None:
            return ()
        if isinstance(value, str):
            value = [part for part in value.split(",") if part.strip()]
        return tuple(as_rational(v) for v in value)

    @field_validator("beta", mode="before")
    @classmethod
    def parse_beta(cls, value):
        if value is None or value == "":
            return None
        return as_rational(value)

    @field_validator("nu", mode="before")
    @classmethod
    def parse_nu(cls, value):
        if value is None:
            return ()
        if isinstance(value, str):
            value = [part for part in value.split(",") if part.strip()]
        nu = []
        for v in value:
            q = as_rational(v) if not isinstance(v, int) else Fraction(v)
            if q.denominator != 1:
                raise ParameterError(f"nu entries must be integers, got {v}")
            nu.append(int(q))
        return tuple(nu)

    @model_validator(mode="after")
    def check_constraints(self):
        if self.family in (Family.JACOBI_PINEIRO, Family.MULTIPLE_LAGUERRE):
            if len(self.alpha) != self.r:
                raise ParameterError(f"alpha needs {self.r} entries, got {len(self.alpha)}")
            for j, a in enumerate(self.alpha):
                if a <= -1:
                    raise ParameterError(f"alpha[{j}] = {a} must exceed -1")
            for i in range(self.r):
                for j in range(i + 1, self.r):
                    if (self.alpha[i] - self.alpha[j]).denominator == 1:
                        raise ParameterError(
                            f"alpha difference is an integer: violates normality "
                            f"(alpha[{i}] = {self.alpha[i]}, alpha[{j}] = {self.alpha[j]})"
                        )
        if self.family == Family.JACOBI_PINEIRO:
            if self.beta is None:
                raise ParameterError("Jacobi-Piñeiro family needs beta")
            if self.beta <= -1:
                raise ParameterError(f"beta = {self.beta} must exceed -1")
        if self.family == Family.MEIJER_G:
            if len(self.nu) != self.r:
                raise ParameterError(f"nu needs {self.r} entries, got {len(self.nu)}")
            if any(v < 0 for v in self.nu):
                raise ParameterError("nu entries must be nonnegative integers")
        return self

    @classmethod
    def create(cls, **values) -> "FamilyParams":
        """Validated parameters; a failed validation is raised as ParameterError"""
        try:
            return cls(**values)
        except ValidationError as exc:
            reasons = "; ".join(error["msg"].removeprefix("Value error, ") for error in exc.errors())
            raise ParameterError(reasons) from exc

    @classmethod
    def jacobi_pineiro(cls, alpha: Sequence, beta) -> "FamilyParams":
        return cls.create(family=Family.JACOBI_PINEIRO, r=len(alpha), alpha=alpha, beta=beta)

    @classmethod
    def multiple_laguerre(cls, alpha: Sequence) -> "FamilyParams":
        return cls.create(family=Family.MULTIPLE_LAGUERRE, r=len(alpha), alpha=alpha)

    @classmethod
    def meijer_g(cls, nu: Sequence[int]) -> "FamilyParams":
        return cls.create(family=Family.MEIJER_G, r=len(nu), nu=nu)

    def check_index(self, n: MultiIndex):
        if n.r != self.r:
            raise ParameterError(f"multi-index {n} has {n.r} entries, expected {self.r}")


def _require(params: FamilyParams, family: Family):
    if params.family != family:
        raise ParameterError(f"expected {family.value} parameters, got {params.family.value}")


def build_jp(params: FamilyParams, n: MultiIndex) -> ExactPolynomial:
    """Solve the |n| x |n| orthogonality system for the monic P_n"""
    _require(params, Family.JACOBI_PINEIRO)
    params.check_index(n)
    size = n.size
    if size == 0:
        return ExactPolynomial.one()

    moments = [beta_moments(a, params.beta, 2 * size) for a in params.alpha]
    matrix: List[List[Fraction]] = []
    rhs: List[Fraction] = []
    for j, nj in enumerate(n):
        for k in range(nj):
            matrix.append(moments[j][k:k + size])
            rhs.append(-moments[j][k + size])
    solution = solve_exact(matrix, rhs)
    logger.debug(f"[JP] solved {size}x{size} orthogonality system for n={n}")
    return ExactPolynomial(tuple(solution) + (Fraction(1),))


def build_ml_explicit(params: FamilyParams, n: MultiIndex) -> ExactPolynomial:
    """Expand the explicit nested binomial sum for L_n"""
    _require(params, Family.MULTIPLE_LAGUERRE)
    params.check_index(n)
    size = n.size
    r = params.r
    coeffs = [Fraction(0)] * (size + 1)

    # tails[j] = n_j + ... + n_{r-1}
    tails = [sum(n.entries[j:]) for j in range(r)]
    for ks in product(*(range(nj + 1) for nj in n)):
        term = Fraction(-1 if sum(ks) % 2 else 1)
        for nj, kj in zip(n, ks):
            term *= perm(nj, kj)
        k_tail = 0
        for j in reversed(range(r)):
            top = tails[j] - k_tail + params.alpha[j]
            term *= generalized_binomial(top, ks[j])
            k_tail += ks[j]
        coeffs[size - sum(ks)] += term
    return ExactPolynomial(tuple(coeffs))


def build_meijer_stepline(nu: Sequence[int], n: int) -> ExactPolynomial:
    """Monic Meijer-G stepline polynomial of degree n"""
    nu = [int(v) for v in nu]
    if not nu or any(v < 0 for v in nu):
        raise ParameterError("nu must be a nonempty sequence of nonnegative integers")
    if n < 0:
        raise ParameterError("degree must be nonnegative")
    top = 1
    for v in nu:
        top *= factorial(n + v)
    coeffs = []
    for k in range(n + 1):
        bottom = 1
        for v in nu:
            bottom *= factorial(k + v)
        sign = -1 if (n + k) % 2 else 1
        coeffs.append(Fraction(sign * _binomial(n, k) * top, bottom))
    return ExactPolynomial(tuple(coeffs)).monic()


def _binomial(n: int, k: int) -> int:
    return factorial(n) // (factorial(k) * factorial(n - k))


def build_polynomial(params: FamilyParams, n: MultiIndex) -> ExactPolynomial:
    """Direct construction for whichever family params describe.

    Meijer-G polynomials live on the stepline, so only the size of n is used.
    """
    params.check_index(n)
    if params.family == Family.JACOBI_PINEIRO:
        return build_jp(params, n)
    if params.family == Family.MULTIPLE_LAGUERRE:
        return build_ml_explicit(params, n)
    return build_meijer_stepline(params.nu, n.size)


class OrthogonalityResult:
    """Outcome of an exact orthogonality check with the first failing integral"""

    def __init__(self, passed: bool, witness: Optional[Fraction] = None,
                 weight: Optional[int] = None, power: Optional[int] = None):
        self.passed = passed
        self.witness = witness
        self.weight = weight
        self.power = power

    def __bool__(self) -> bool:
        return self.passed

    def __repr__(self) -> str:
        if self.passed:
            return "OrthogonalityResult(passed=True)"
        return (f"OrthogonalityResult(passed=False, witness={self.witness}, "
                f"weight={self.weight}, power={self.power})")


def orthogonality_check(params: FamilyParams, p: ExactPolynomial, n: MultiIndex) -> OrthogonalityResult:
    """Evaluate every normalized orthogonality integral of p exactly"""
    params.check_index(n)
    if p.degree != n.size:
        raise ParameterError(f"degree {p.degree} does not match |n| = {n.size}")
    if params.family == Family.MEIJER_G:
        raise ParameterError("orthogonality conditions are available for jp and ml families only")

    for j, nj in enumerate(n):
        if nj == 0:
            continue
        count = nj - 1 + p.degree
        if params.family == Family.JACOBI_PINEIRO:
            moments = beta_moments(params.alpha[j], params.beta, count)
        else:
            moments = gamma_moments(params.alpha[j], count)
        for k in range(nj):
            integral = sum((c * moments[k + i] for i, c in enumerate(p.coeffs)), Fraction(0))
            if integral != 0:
                return OrthogonalityResult(False, integral, j, k)
    return OrthogonalityResult(True)
