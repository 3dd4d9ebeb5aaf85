"""Newton path continuation for branches of algebraic functions.

A branch is pinned down by its behaviour at infinity, so tracking always
starts from a point of large modulus and walks towards the target along
legs that stay off the real support of the branch cut.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional

from mpmath import mp

from .errors import ContinuationError, ParameterError
from .exact import to_mpf

logger = logging.getLogger(__name__)

SEED_RADIUS = 10 ** 6
MIN_STEP = 2.0 ** -40
MAX_STEP = 0.125


@dataclass(frozen=True)
class Leg:
    """One straight piece of a continuation path.

    Radial legs move along a ray from the origin and are parametrized
    geometrically in the modulus so large distances are covered quickly.
    """

    start: object
    end: object
    radial: bool = False

    def point(self, t):
        if t <= 0:
            return self.start
        if t >= 1:
            return self.end
        if self.radial:
            return self.start * mp.power(self.end / self.start, t)
        return self.start + (self.end - self.start) * t


def route(x, support_end=None, radius=SEED_RADIUS) -> List[Leg]:
    """Legs from a far seed point to x that avoid [0, support_end] on the real axis.

    support_end None means the cut is the whole half-line [0, inf). Rational x and
    support_end are rounded at the current working precision.
    """
    x = mp.mpc(to_mpf(x)) if isinstance(x, (int, Fraction)) else mp.mpc(x)
    if isinstance(support_end, (int, Fraction)):
        support_end = to_mpf(support_end)
    far = max(mp.mpf(radius), 2 * abs(x))
    if mp.im(x) == 0:
        re = mp.re(x)
        if re < 0:
            start = mp.mpc(-far)
        elif support_end is not None and re > support_end:
            start = mp.mpc(far)
        else:
            raise ParameterError(f"point {mp.nstr(re, 10)} lies on the branch cut")
        return [Leg(start, x, radial=True)]

    direction = mp.mpc(0, 1) if mp.im(x) > 0 else mp.mpc(0, -1)
    corner = direction * max(mp.mpf(1), abs(x))
    legs = []
    if far > abs(corner):
        legs.append(Leg(direction * far, corner, radial=True))
    legs.append(Leg(corner, x))
    return legs


def newton(f: Callable, f_z: Callable, x, z, tol, max_iter: int = 50) -> Optional[object]:
    """Newton iteration in z for f(z, x) = 0; None if it does not settle"""
    for _ in range(max_iter):
        slope = f_z(z, x)
        if slope == 0:
            return None
        step = f(z, x) / slope
        z = z - step
        if abs(step) <= tol * max(1, abs(z)):
            return z
    return None


def track_branch(
    f: Callable,
    f_z: Callable,
    f_x: Callable,
    legs: List[Leg],
    seed: Callable,
    bits: int = 128,
    label: str = "BRANCH",
):
    """Follow the root of f(z, x) = 0 selected by seed(x_start) along legs.

    Steps are predicted with the implicit derivative dz/dx = -f_x / f_z,
    corrected by Newton and halved whenever the correction is not small
    compared to the step, which keeps the path on one branch.
    """
    with mp.workprec(bits):
        tol = mp.mpf(2) ** (-bits + 8)
        loose = mp.mpf(2) ** (-(bits // 2))
        x_prev = mp.mpc(legs[0].point(0))
        z = newton(f, f_z, x_prev, mp.mpc(seed(x_prev)), tol)
        if z is None:
            raise ContinuationError(f"continuation failed: seed did not converge at {x_prev}")

        steps = 0
        for leg in legs:
            t = mp.mpf(0)
            dt = mp.mpf(1) / 16
            x_prev = mp.mpc(leg.point(0))
            while t < 1:
                dt = min(dt, 1 - t)
                x_new = mp.mpc(leg.point(t + dt))
                slope = f_z(z, x_prev)
                predicted = z if slope == 0 else z - f_x(z, x_prev) / slope * (x_new - x_prev)
                corrected = newton(f, f_z, x_new, predicted, loose, max_iter=8)
                accepted = corrected is not None and (
                    abs(corrected - predicted) <= mp.mpf("0.5") * abs(corrected - z) + loose * max(1, abs(z))
                )
                if accepted:
                    z, x_prev, t = corrected, x_new, t + dt
                    dt = min(2 * dt, mp.mpf(MAX_STEP))
                    steps += 1
                else:
                    dt /= 2
                    if dt < MIN_STEP:
                        raise ContinuationError(
                            f"continuation failed: step halving exhausted near x = {mp.nstr(x_new, 12)}"
                        )
        target = mp.mpc(legs[-1].point(1))
        polished = newton(f, f_z, target, z, tol)
        if polished is None:
            raise ContinuationError(f"continuation failed: final polish at {mp.nstr(target, 12)}")
        logger.debug(f"[{label}] tracked branch in {steps} steps to x = {mp.nstr(target, 8)}")
        return polished
