"""Limit zero densities in the trigonometric parametrization.

Every density lives on [0, c_r] (or [0, 1] for v) and is written in terms of
phi in (0, pi/(r+1)) through

    x(phi) = sin((r+1) phi)^(r+1) / (sin(phi) sin(r phi)^r),

which is strictly decreasing. Integrals over x are pulled back to phi, where
the mass elements density * |x'(phi)| are smooth up to both ends.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb
from typing import List, Optional, Tuple

import numpy as np
from mpmath import mp

from .config import settings
from .continuation import route, track_branch
from .errors import NumericalError, ParameterError
from .exact import to_mpf

logger = logging.getLogger(__name__)


class DensityKind(str, Enum):
    W = "w"
    V = "v"
    U = "u"
    G = "g"
    XG = "xg"


def density_kind(kind) -> DensityKind:
    try:
        return DensityKind(kind)
    except ValueError as exc:
        raise ParameterError(f"unknown density kind {kind!r}; expected one of w, v, u, g, xg") from exc


def _check_r(r: int):
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise ParameterError(f"r must be a positive integer, got {r!r}")


def c_r(r: int) -> Fraction:
    """Right end (r+1)^(r+1)/r^r of the support of w_r, u_r and g_r"""
    _check_r(r)
    return Fraction((r + 1) ** (r + 1), r ** r)


def phi_max(r: int):
    return mp.pi / (r + 1)


def _real(value):
    if isinstance(value, Fraction):
        return to_mpf(value)
    return mp.mpf(value)


def _complex(value):
    if isinstance(value, Fraction):
        return mp.mpc(to_mpf(value))
    return mp.mpc(value)


def _check_phi(r: int, phi):
    _check_r(r)
    phi = _real(phi)
    if not 0 < phi < phi_max(r):
        raise ParameterError(f"phi = {mp.nstr(phi, 10)} outside (0, pi/{r + 1})")
    return phi


# The formula helpers below take lib=mp for scalars or lib=np for arrays.

def _x(r, phi, lib=mp):
    return lib.sin((r + 1) * phi) ** (r + 1) / (lib.sin(phi) * lib.sin(r * phi) ** r)


def _discriminant(r, phi, lib=mp):
    """|(r+1) sin(r phi) - e^{i phi} r sin((r+1) phi)|^2"""
    sr, sr1 = lib.sin(r * phi), lib.sin((r + 1) * phi)
    return (r + 1) ** 2 * sr ** 2 - 2 * r * (r + 1) * sr * sr1 * lib.cos(phi) + r ** 2 * sr1 ** 2


def _density(kind: DensityKind, r, phi, lib=mp):
    s1, sr, sr1 = lib.sin(phi), lib.sin(r * phi), lib.sin((r + 1) * phi)
    if kind in (DensityKind.W, DensityKind.V):
        value = (r + 1) * s1 * sr * sr1 / (lib.pi * _x(r, phi, lib) * _discriminant(r, phi, lib))
        if kind == DensityKind.V:
            value = value * (float(c_r(r)) if lib is np else to_mpf(c_r(r)))
        return value
    if kind == DensityKind.U:
        return sr ** (r + 1) / (r * lib.pi * sr1 ** r)
    if kind == DensityKind.G:
        return s1 ** 2 * sr ** (r - 1) / (lib.pi * sr1 ** r)
    return s1 * sr1 / (lib.pi * sr)


def _mass(kind: DensityKind, r, phi, lib=mp):
    """density(x(phi)) * |x'(phi)|"""
    if kind in (DensityKind.W, DensityKind.V):
        if lib is np:
            return np.full_like(phi, (r + 1) / np.pi)
        return (r + 1) / mp.pi
    d = _discriminant(r, phi, lib)
    if kind == DensityKind.U:
        return d / (r * lib.pi * lib.sin(phi) ** 2)
    if kind == DensityKind.G:
        return d / (lib.pi * lib.sin(r * phi) ** 2)
    return _x(r, phi, lib) * d / (lib.pi * lib.sin(r * phi) ** 2)


@dataclass(frozen=True)
class PhiPoint:
    r: int
    phi: object
    x_hat: object

    @property
    def rho(self):
        """Modulus of the boundary value of the Fuss-Catalan branch at x_hat"""
        return mp.sin((self.r + 1) * self.phi) / mp.sin(self.r * self.phi)

    def boundary_omega(self):
        """Limit of the branch from the upper half plane"""
        return self.rho * mp.expj(-self.phi)


def phi_point(r: int, phi) -> PhiPoint:
    phi = _check_phi(r, phi)
    return PhiPoint(r, phi, _x(r, phi))


def x_of_phi(r: int, phi):
    phi = _check_phi(r, phi)
    return _x(r, phi)


def x_prime(r: int, phi):
    """d x / d phi = -x D / (sin(phi) sin(r phi) sin((r+1) phi)), always negative"""
    phi = _check_phi(r, phi)
    s1, sr, sr1 = mp.sin(phi), mp.sin(r * phi), mp.sin((r + 1) * phi)
    return -_x(r, phi) * _discriminant(r, phi) / (s1 * sr * sr1)


def x_endpoint_expansion(r: int, phi):
    """Leading behaviour of x(phi) at whichever end of (0, pi/(r+1)) phi is closer to"""
    phi = _check_phi(r, phi)
    edge = phi_max(r)
    if phi <= edge / 2:
        return to_mpf(c_r(r)) * (1 - comb(r + 1, 2) * phi ** 2)
    return ((r + 1) / mp.sin(edge)) ** (r + 1) * (edge - phi) ** (r + 1)


def phi_of_x(r: int, x_hat, max_iter: int = 200):
    """Invert x(phi) by Newton steps safeguarded with a shrinking bracket"""
    _check_r(r)
    x_hat = _real(x_hat)
    c = to_mpf(c_r(r))
    if not 0 < x_hat < c:
        raise ParameterError(f"x = {mp.nstr(x_hat, 10)} outside (0, {c_r(r)})")
    edge = phi_max(r)
    lower, upper = mp.zero, edge
    if x_hat > c / 2:
        phi = mp.sqrt((1 - x_hat / c) / comb(r + 1, 2))
    else:
        phi = edge - (x_hat * (mp.sin(edge) / (r + 1)) ** (r + 1)) ** (mp.one / (r + 1))
    if not lower < phi < upper:
        phi = edge / 2
    tol = 16 * mp.eps
    for _ in range(max_iter):
        excess = _x(r, phi) - x_hat
        if excess == 0:
            return phi
        if excess > 0:
            lower = phi
        else:
            upper = phi
        s1, sr, sr1 = mp.sin(phi), mp.sin(r * phi), mp.sin((r + 1) * phi)
        slope = -_x(r, phi) * _discriminant(r, phi) / (s1 * sr * sr1)
        candidate = phi - excess / slope if slope != 0 else (lower + upper) / 2
        if not lower < candidate < upper:
            candidate = (lower + upper) / 2
        if abs(candidate - phi) <= tol * candidate or upper - lower <= tol * candidate:
            return candidate
        phi = candidate
    raise NumericalError(f"phi_of_x did not converge at x = {mp.nstr(x_hat, 10)}")


def density_w(r: int, phi):
    """w_r = (r+1) / (pi |x'(phi)|)"""
    return (r + 1) / (mp.pi * abs(x_prime(r, phi)))


def density_w_explicit(r: int, phi):
    """The trigonometric quotient form of w_r, an independent code path"""
    phi = _check_phi(r, phi)
    return _density(DensityKind.W, r, phi)


def density_v(r: int, x):
    """v_r(x) = c_r w_r(c_r x) on (0, 1)"""
    x = _real(x)
    if not 0 < x < 1:
        raise ParameterError(f"x = {mp.nstr(x, 10)} outside (0, 1)")
    c = to_mpf(c_r(r))
    return c * density_w(r, phi_of_x(r, c * x))


def density_u(r: int, phi):
    phi = _check_phi(r, phi)
    return _density(DensityKind.U, r, phi)


def density_g(r: int, phi):
    phi = _check_phi(r, phi)
    return _density(DensityKind.G, r, phi)


def weight_xg(r: int, phi):
    """x g_r(x), the weight of the Fuss-Catalan measure shifted by one"""
    phi = _check_phi(r, phi)
    return _density(DensityKind.XG, r, phi)


def density_phi(kind, r: int, phi):
    kind = density_kind(kind)
    phi = _check_phi(r, phi)
    return _density(kind, r, phi)


def _phi_for(kind: DensityKind, r: int, x):
    x = _real(x)
    if kind == DensityKind.V:
        return phi_of_x(r, to_mpf(c_r(r)) * x)
    return phi_of_x(r, x)


def density_at(kind, r: int, x):
    """Density of the given kind at a point of its own variable (x in (0,1) for v)"""
    kind = density_kind(kind)
    return _density(kind, r, _phi_for(kind, r, x))


def _phi_integral(integrand, a, b, tol=None, depth: int = 0):
    """Gauss-Legendre in phi with recursive halving until the error estimate is small"""
    tol = tol if tol is not None else mp.mpf(10) ** (-mp.dps + 8)
    value, error = mp.quad(integrand, [a, b], method="gauss-legendre", error=True)
    if error <= tol * max(1, abs(value)) or depth >= 12:
        return value
    mid = (a + b) / 2
    return _phi_integral(integrand, a, mid, tol, depth + 1) + _phi_integral(integrand, mid, b, tol, depth + 1)


def cdf_w(r: int, x_hat):
    """1 - (r+1) phi / pi, the uniform law in phi"""
    x_hat = _real(x_hat)
    if x_hat <= 0:
        return mp.zero
    if x_hat >= to_mpf(c_r(r)):
        return mp.one
    return 1 - (r + 1) * phi_of_x(r, x_hat) / mp.pi


def cdf_v(r: int, x):
    return cdf_w(r, to_mpf(c_r(r)) * _real(x))


def _cdf_by_quadrature(kind: DensityKind, r: int, x_hat):
    with mp.workdps(settings.dps):
        x_hat = _real(x_hat)
        if x_hat <= 0:
            return mp.zero
        if x_hat >= to_mpf(c_r(r)):
            if kind == DensityKind.XG:
                return _phi_integral(lambda t: _mass(kind, r, t), 0, phi_max(r))
            return mp.one
        phi = phi_of_x(r, x_hat)
        return _phi_integral(lambda t: _mass(kind, r, t), phi, phi_max(r))


def cdf_u(r: int, x_hat):
    return _cdf_by_quadrature(DensityKind.U, r, x_hat)


def cdf_g(r: int, x_hat):
    return _cdf_by_quadrature(DensityKind.G, r, x_hat)


def cdf(kind, r: int, x):
    kind = density_kind(kind)
    if kind == DensityKind.W:
        return cdf_w(r, x)
    if kind == DensityKind.V:
        return cdf_v(r, x)
    return _cdf_by_quadrature(kind, r, x)


def moment_target(kind, r: int, m: int) -> Fraction:
    """Exact moment of order m of the given density"""
    kind = density_kind(kind)
    _check_r(r)
    central = Fraction(comb((r + 1) * m, m))
    if kind == DensityKind.W:
        return central
    if kind == DensityKind.V:
        return central / c_r(r) ** m
    if kind == DensityKind.U:
        return central / (m + 1)
    if kind == DensityKind.G:
        return central / (r * m + 1)
    return Fraction(comb((r + 1) * (m + 1), m + 1), r * (m + 1) + 1)


@dataclass(frozen=True)
class MomentResult:
    value: object
    target: Fraction
    error: float


def moment(kind, r: int, m: int) -> MomentResult:
    """Quadrature moment next to its exact target"""
    kind = density_kind(kind)
    _check_r(r)
    if not 0 <= m <= 12:
        raise ParameterError(f"moment order must be in 0..12, got {m}")
    target = moment_target(kind, r, m)
    with mp.workdps(settings.dps):
        scale = 1 / to_mpf(c_r(r)) if kind == DensityKind.V else mp.one
        value = _phi_integral(lambda t: (scale * _x(r, t)) ** m * _mass(kind, r, t), 0, phi_max(r))
        error = float(abs(value - to_mpf(target)))
    return MomentResult(value, target, error)


@dataclass(frozen=True)
class FCBranch:
    """The Fuss-Catalan generating branch at x_hat with omega -> 1 at infinity"""

    x_hat: object
    omega: object
    z_hat: object
    F: object

    def residual(self, r: int):
        return self.omega ** (r + 1) - self.x_hat * self.omega + self.x_hat


def fc_branch(r: int, x_hat, bits: Optional[int] = None) -> FCBranch:
    """Solve omega^(r+1) - x omega + x = 0 by continuation from omega = 1 + 1/x far away"""
    _check_r(r)
    bits = bits or settings.bits
    with mp.workprec(bits):
        x = _complex(x_hat)
        c = to_mpf(c_r(r))
        if x == c:
            omega = mp.mpc(mp.mpf(r + 1) / r)
        else:
            omega = track_branch(
                lambda w, s: w ** (r + 1) - s * w + s,
                lambda w, s: (r + 1) * w ** r - s,
                lambda w, s: 1 - w,
                route(x, support_end=c),
                seed=lambda s: 1 + 1 / s,
                bits=bits,
                label="FC",
            )
        z_hat = ((r + 1) * omega - r) / (omega - 1)
        return FCBranch(x, omega, z_hat, omega / x)


def stieltjes_w_from_branch(r: int, x_hat, bits: Optional[int] = None):
    """Integral of w_r(s) / (x_hat - s) from the branch: omega / (x_hat (r + 1 - r omega))"""
    branch = fc_branch(r, x_hat, bits)
    with mp.workprec(bits or settings.bits):
        return branch.omega / (branch.x_hat * (r + 1 - r * branch.omega))


def stieltjes_transform(kind, r: int, x, scale=1):
    """Integral of density(y) / (x - scale*y) dy by quadrature in phi"""
    kind = density_kind(kind)
    _check_r(r)
    with mp.workdps(settings.dps):
        x = _complex(x)
        scale = _real(scale)
        if kind == DensityKind.V:
            kind, scale = DensityKind.W, scale / to_mpf(c_r(r))
        end = scale * to_mpf(c_r(r))
        if mp.im(x) == 0 and 0 <= mp.re(x) <= end:
            raise ParameterError(f"x = {mp.nstr(x, 10)} lies on the support")
        return _phi_integral(lambda t: _mass(kind, r, t) / (x - scale * _x(r, t)), 0, phi_max(r))


def limit_log_derivative(r: int, x, bits: Optional[int] = None):
    """Limit of P'(x) / (rn P(x)) on the Jacobi-Piñeiro diagonal, i.e. the Stieltjes transform of v_r"""
    bits = bits or settings.bits
    with mp.workprec(bits):
        c = to_mpf(c_r(r))
        return c * stieltjes_w_from_branch(r, c * _complex(x), bits)


def ml_limit_log_derivative(r: int, x, bits: Optional[int] = None):
    """Integral over t in (0, 1) of z'(x, t) / (z(x, t) - t (r+1)/r) by the scaling reduction"""
    bits = bits or settings.bits
    _check_r(r)
    with mp.workdps(settings.dps):
        x = _complex(x)
        if mp.im(x) == 0 and mp.re(x) >= 0:
            raise ParameterError("x must lie off [0, inf) for the scaled Laguerre transform")

        def integrand(t):
            branch = fc_branch(r, r * x / t, bits)
            return branch.omega / (x * (r + 1 - r * branch.omega))

        return mp.quad(integrand, [0, 1], method="gauss-legendre", maxdegree=6)


def stieltjes_density_recover(r: int, points, kind="v", eps="1e-20", bits: Optional[int] = None) -> List[Tuple]:
    """(x, recovered density, parametric density) from boundary values of the branch"""
    kind = density_kind(kind)
    if kind not in (DensityKind.V, DensityKind.W):
        raise ParameterError("Stieltjes recovery is available for the w and v densities")
    bits = bits or settings.bits
    rows = []
    with mp.workprec(bits):
        c = to_mpf(c_r(r))
        eps = mp.mpf(eps)
        for point in points:
            x = _real(point)
            x_hat = c * x if kind == DensityKind.V else x
            transform = stieltjes_w_from_branch(r, mp.mpc(x_hat, eps), bits)
            recovered = -mp.im(transform) / mp.pi
            if 0 < x_hat < c:
                expected = density_w(r, phi_of_x(r, x_hat))
            else:
                expected = mp.zero
            if kind == DensityKind.V:
                recovered, expected = c * recovered, c * expected
            rows.append((x, recovered, expected))
    return rows


def mellin_check_u(r: int, y) -> Tuple:
    """u_r(y) next to the integral of w_r(x)/x over (y, c_r)"""
    with mp.workdps(settings.dps):
        theta = phi_of_x(r, y)
        left = _density(DensityKind.U, r, theta)
        right = (r + 1) / mp.pi * _phi_integral(lambda t: 1 / _x(r, t), 0, theta)
        return left, right


def mellin_check_g(r: int, y) -> Tuple:
    """g_r(y) next to its Mellin convolution of w_r with the beta(1/r, 1) density"""
    with mp.workdps(settings.dps):
        y = _real(y)
        theta = phi_of_x(r, y)
        left = _density(DensityKind.G, r, theta)
        integral = _phi_integral(lambda t: _x(r, t) ** (-mp.one / r), 0, theta)
        right = y ** (mp.one / r - 1) * (r + 1) / (r * mp.pi) * integral
        return left, right


def endpoint_exponent(kind, r: int, end="0", window=(1e-12, 1e-8), samples: int = 16) -> float:
    """Log-log least-squares slope of the density against the distance to an endpoint.

    The default window sits well inside [1e-8, 1e-4] because the first correction
    at 0 is of relative order x^(1/(r+1)), too large at 1e-4 for r >= 3.
    """
    kind = density_kind(kind)
    _check_r(r)
    if r > 6:
        raise ParameterError("endpoint exponents are estimated for r <= 6")
    if str(end) not in ("0", "right"):
        raise ParameterError(f"end must be '0' or 'right', got {end!r}")
    left_end = str(end) == "0"
    distances, values = [], []
    with mp.workdps(40):
        c = to_mpf(c_r(r))
        span = mp.one if kind == DensityKind.V else c
        for d in np.geomspace(window[0], window[1], samples):
            d = mp.mpf(d)
            position = d if left_end else span - d
            phi = _phi_for(kind, r, position)
            x_hat = _x(r, phi)
            actual = x_hat / c if kind == DensityKind.V else x_hat
            distances.append(float(mp.log(actual if left_end else span - actual)))
            values.append(float(mp.log(_density(kind, r, phi))))
    slope = np.polyfit(np.asarray(distances), np.asarray(values), 1)[0]
    logger.debug(f"[ENDPOINT] kind={kind.value} r={r} end={end} slope={slope:.6f}")
    return float(slope)


def z_of_xt(r: int, x, t, method: str = "scaling", bits: Optional[int] = None):
    """Branch z(x, t) of x (z - t(r+1)/r)^r = (z - t)^(r+1) with z ~ x at infinity"""
    _check_r(r)
    bits = bits or settings.bits
    with mp.workprec(bits):
        t = _real(t)
        if not 0 < t <= 1:
            raise ParameterError(f"t must lie in (0, 1], got {mp.nstr(t, 10)}")
        x = _complex(x)
        if method == "scaling":
            branch = fc_branch(r, r * x / t, bits)
            return t * branch.z_hat / r
        if method == "direct":
            centre = t * mp.mpf(r + 1) / r
            return track_branch(
                lambda z, s: (z - t) ** (r + 1) - s * (z - centre) ** r,
                lambda z, s: (r + 1) * (z - t) ** r - r * s * (z - centre) ** (r - 1),
                lambda z, s: -(z - centre) ** r,
                route(x, support_end=t * to_mpf(c_r(r)) / r),
                seed=lambda s: s,
                bits=bits,
                label="MLT",
            )
    raise ParameterError(f"unknown method {method!r}; expected 'scaling' or 'direct'")


def arcsine_density(x):
    x = _real(x)
    return 1 / (mp.pi * mp.sqrt(x * (1 - x)))


def arcsine_cdf(x):
    return 2 / mp.pi * mp.asin(mp.sqrt(_real(x)))


def marchenko_pastur_density(x_hat):
    x_hat = _real(x_hat)
    return mp.sqrt((4 - x_hat) / x_hat) / (2 * mp.pi)


def v2_closed(x):
    """Closed form of v_2 on (0, 1)"""
    x = _real(x)
    if not 0 < x < 1:
        raise ParameterError("v2_closed needs x in (0, 1)")
    s = mp.sqrt(1 - x)
    return mp.sqrt(3) / (4 * mp.pi) * (mp.cbrt(1 + s) + mp.cbrt(1 - s)) / (x ** (mp.mpf(2) / 3) * s)


def h_closed(y):
    y = _real(y)
    if not 0 < y < 1:
        raise ParameterError("h_closed needs y in (0, 1)")
    s = mp.sqrt(1 - y)
    return 3 * mp.sqrt(3) / (4 * mp.pi) * (mp.cbrt(1 + s) - mp.cbrt(1 - s)) / y ** (mp.mpf(2) / 3)


def g2_closed(x):
    """g_2(x) = (4/27) h(4x/27)"""
    return mp.mpf(4) / 27 * h_closed(mp.mpf(4) * _real(x) / 27)


def u2_profile(y):
    y = _real(y)
    if not 0 < y < 1:
        raise ParameterError("u2_profile needs y in (0, 1)")
    s = mp.sqrt(1 - y)
    numerator = (1 + 3 * s) * mp.cbrt(1 - s) - (1 - 3 * s) * mp.cbrt(1 + s)
    return 3 * mp.sqrt(3) / (16 * mp.pi) * numerator / y ** (mp.mpf(2) / 3)


def u2_closed(x_hat):
    """u_2(x) = (4/27) u2_profile(4x/27) on (0, 27/4)"""
    return mp.mpf(4) / 27 * u2_profile(mp.mpf(4) * _real(x_hat) / 27)


@dataclass(frozen=True)
class DensitySample:
    phi: float
    x: float
    density: float
    cdf: float


@dataclass(frozen=True)
class DensityCurve:
    kind: DensityKind
    r: int
    samples: Tuple[DensitySample, ...]
    support: Tuple[float, float]

    def scaled(self, factor: float) -> "DensityCurve":
        """The curve of the law of factor * X"""
        samples = tuple(
            DensitySample(s.phi, s.x * factor, s.density / factor, s.cdf) for s in self.samples
        )
        return DensityCurve(self.kind, self.r, samples, (self.support[0] * factor, self.support[1] * factor))


def _endpoint_density(kind: DensityKind, at_zero: bool) -> float:
    if kind == DensityKind.XG:
        return 0.0
    if at_zero:
        return float("inf")
    return float("inf") if kind in (DensityKind.W, DensityKind.V) else 0.0


def density_table(kind, r: int, grid: Optional[int] = None, panel_nodes: int = 8) -> DensityCurve:
    """Uniform phi grid, listed by ascending x, with a panel Gauss-Legendre cdf column"""
    kind = density_kind(kind)
    _check_r(r)
    grid = grid or settings.grid
    if grid < 2:
        raise ParameterError("grid needs at least 2 intervals")
    c = float(c_r(r))
    edge = np.pi / (r + 1)
    phis = edge * (grid - np.arange(grid + 1)) / grid
    interior = phis[1:-1]

    x = np.empty(grid + 1)
    x[0], x[-1] = 0.0, c
    x[1:-1] = _x(r, interior, np)
    density = np.empty(grid + 1)
    density[0] = _endpoint_density(kind, True)
    density[-1] = _endpoint_density(kind, False)
    density[1:-1] = _density(kind, r, interior, np)

    nodes, weights = np.polynomial.legendre.leggauss(panel_nodes)
    lower, upper = phis[1:], phis[:-1]
    half = (upper - lower) / 2
    points = (lower + upper)[:, None] / 2 + half[:, None] * nodes[None, :]
    panels = (_mass(kind, r, points, np) * weights).sum(axis=1) * half
    cumulative = np.concatenate(([0.0], np.cumsum(panels)))

    support = (0.0, c)
    if kind == DensityKind.V:
        x = x / c
        support = (0.0, 1.0)
    samples = tuple(
        DensitySample(float(p), float(xv), float(dv), float(cv))
        for p, xv, dv, cv in zip(phis, x, density, cumulative)
    )
    logger.debug(f"[DENSITY] kind={kind.value} r={r} grid={grid} mass={cumulative[-1]:.15f}")
    return DensityCurve(kind, r, samples, support)
