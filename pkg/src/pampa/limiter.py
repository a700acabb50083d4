"""Blending coefficients that keep the blended update inside its bounds.

Scalar problems are limited against global bounds [u_min - delta, u_max + delta]
and, on cells flagged as non-smooth, against local bounds built from the
cell average and the two neighbouring interface intermediate states.  For
the Euler equations the admissible set {rho > 0, E - m^2/(2 rho) > 0} is
written as infinitely many linear constraints u . (nu^2/2, -nu, 1) > 0,
and the largest admissible coefficient follows from a 2x2 generalised
eigenvalue problem.

All pointwise routines are jitted so the stage kernels can inline them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import BoundViolationError, InvalidStateError
from .kernels import parabola_slope

EPS_RHO = 1e-13
SAFETY = 1.0 - 1e-12
# tolerated overshoot of an intermediate state before it counts as an error
STAR_TOL = 1e-12


@dataclass(frozen=True)
class ScalarBounds:
    u_min_global: float
    u_max_global: float
    relax_margin: float = 0.0

    @classmethod
    def strict(cls, u_min, u_max):
        return cls(float(u_min), float(u_max), 0.0)

    @classmethod
    def relaxed(cls, u_min, u_max):
        return cls(float(u_min), float(u_max), max(1e-4, 1e-3 * (u_max - u_min)))

    @property
    def lower(self) -> float:
        return self.u_min_global - self.relax_margin

    @property
    def upper(self) -> float:
        return self.u_max_global + self.relax_margin

    @property
    def tolerance(self) -> float:
        return STAR_TOL * max(self.upper - self.lower, 1.0)


@dataclass(frozen=True)
class LocalBounds:
    u_min_local: np.ndarray
    u_max_local: np.ndarray


@dataclass(frozen=True)
class BlendingCoefficients:
    eta: np.ndarray
    theta_left: np.ndarray
    theta_right: np.ndarray


# {{{ pointwise coefficient kernels

@nb.njit(cache=True)
def headroom_coefficient(speed, headroom, delta):
    """Largest c in [0, 1] with c * |delta| <= speed * headroom."""
    d = abs(delta)
    if d == 0.0:
        return 1.0
    room = speed * headroom
    if room <= 0.0:
        return 0.0
    if d <= room:
        return 1.0
    return room / d


@nb.njit(cache=True)
def eta_global_value(u_star, delta, speed, lower, upper):
    return headroom_coefficient(speed, min(upper - u_star, u_star - lower), delta)


@nb.njit(cache=True)
def eta_local_value(u_star, delta, speed, min_left, max_left, min_right, max_right):
    if delta > 0.0:
        return headroom_coefficient(speed, min(max_right - u_star, u_star - min_left), delta)
    if delta < 0.0:
        return headroom_coefficient(speed, min(u_star - min_right, max_left - u_star), delta)
    return 1.0


@nb.njit(cache=True)
def _xi_is_one(z_end, z_mid, z_min, z_max, tol):
    d = z_end - z_mid
    if abs(d) <= tol:
        return True
    if d > 0.0:
        return z_max - z_mid >= d
    return z_min - z_mid <= d


@nb.njit(cache=True)
def smooth_cell(u0, a0, u1, a1, u2, a2, u3, extrapolated=False):
    """Smooth-extremum test for the middle of three consecutive cells.

    Cells are (u0, a0, u1), (u1, a1, u2), (u2, a2, u3) as (left point,
    average, right point).  Slopes are in units of 1/dx, which cancels.
    The derivative envelope takes each neighbour parabola at the two ends
    of its own cell; ``extrapolated`` instead continues both neighbour
    parabolas to the ends of the middle cell.
    """
    z = u2 - u1
    zl = -4.0 * u1 + 6.0 * a1 - 2.0 * u2
    zr = 2.0 * u1 - 6.0 * a1 + 4.0 * u2
    if extrapolated:
        # left neighbour at xi = 1, 2 and right neighbour at xi = -1, 0
        n1 = 2.0 * u0 - 6.0 * a0 + 4.0 * u1
        n2 = 8.0 * u0 - 18.0 * a0 + 10.0 * u1
        n3 = -10.0 * u2 + 18.0 * a2 - 8.0 * u3
        n4 = -4.0 * u2 + 6.0 * a2 - 2.0 * u3
    else:
        n1 = -4.0 * u0 + 6.0 * a0 - 2.0 * u1
        n2 = 2.0 * u0 - 6.0 * a0 + 4.0 * u1
        n3 = -4.0 * u2 + 6.0 * a2 - 2.0 * u3
        n4 = 2.0 * u2 - 6.0 * a2 + 4.0 * u3
    z_min = min(min(n1, n2), min(n3, n4))
    z_max = max(max(n1, n2), max(n3, n4))
    scale = max(max(abs(u0), abs(u1)), max(abs(u2), abs(u3)))
    scale = max(scale, max(max(abs(a0), abs(a1)), abs(a2)))
    scale = max(scale, max(abs(z_min), abs(z_max)))
    tol = 1e-13 * scale
    return _xi_is_one(zl, z, z_min, z_max, tol) and _xi_is_one(zr, z, z_min, z_max, tol)


@nb.njit(cache=True)
def gql_spectral_radius(a1, b1, c1, a2, b2, c2):
    """Spectral radius of B^-1/2 A B^-1/2 for the pencil

    B = [[a1, -b1], [-b1, 2 c1]],  A = [[a2, -b2], [-b2, 2 c2]].

    Returns -1 when B is not positive definite.
    """
    det_b = 2.0 * a1 * c1 - b1 * b1
    if not (a1 > 0.0 and det_b > 0.0):
        return -1.0
    t = 2.0 * (a2 * c1 + a1 * c2 - b1 * b2)
    det_a = 2.0 * a2 * c2 - b2 * b2
    disc = t * t - 4.0 * det_b * det_a
    # real roots are guaranteed; a negative value is rounding
    if disc < 0.0:
        disc = 0.0
    return (abs(t) + math.sqrt(disc)) / (2.0 * det_b)


@nb.njit(cache=True)
def euler_coefficient(rho, m, E, d0, d1, d2, speed):
    """Largest blending coefficient keeping u -+ c*delta/speed in the domain.

    Returns -1 if u itself is not admissible.
    """
    if d0 == 0.0 and d1 == 0.0 and d2 == 0.0:
        return 1.0
    radius = gql_spectral_radius(rho, m, E, d0, d1, d2)
    if radius < 0.0:
        return -1.0
    c_rho = headroom_coefficient(speed, rho - EPS_RHO * max(1.0, rho), d0)
    room = speed * SAFETY
    c_e = 1.0 if radius <= room else room / radius
    return min(c_rho, c_e)

# }}}


# {{{ public vectorised API

def _check_star(u_star, bounds: ScalarBounds):
    u_star = np.asarray(u_star, dtype=float)
    tol = bounds.tolerance
    bad = (u_star < bounds.lower - tol) | (u_star > bounds.upper + tol)
    if np.any(bad):
        where = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise BoundViolationError(
            f"intermediate state {np.atleast_1d(u_star)[where]!r} outside "
            f"[{bounds.lower}, {bounds.upper}] (CFL violation upstream?)",
            location=where, kind="u_star")


_eta_global_vec = np.vectorize(lambda u, d, s, lo, hi: eta_global_value(u, d, s, lo, hi), otypes=[float])
_eta_local_vec = np.vectorize(
    lambda u, d, s, a, b, c, e: eta_local_value(u, d, s, a, b, c, e), otypes=[float])


def _out(values):
    return float(values) if np.ndim(values) == 0 else values


def eta_global_scalar(u_star, delta_F, alpha, bounds: ScalarBounds):
    _check_star(u_star, bounds)
    return _out(_eta_global_vec(u_star, delta_F, alpha, bounds.lower, bounds.upper))


def theta_point_scalar(u_star_side, delta_phi, beta, bounds: ScalarBounds):
    # u* - theta*dphi/beta and the two-sided headroom are symmetric in the sign
    _check_star(u_star_side, bounds)
    return _out(_eta_global_vec(u_star_side, delta_phi, beta, bounds.lower, bounds.upper))


def eta_local_scalar(u_star, delta_F, alpha, lb_left, lb_right):
    """Local-maximum-principle coefficient of one interface.

    ``lb_left``/``lb_right`` are (u_min, u_max) pairs (or LocalBounds) of
    the cells left and right of the interface.
    """
    lmin, lmax = (lb_left.u_min_local, lb_left.u_max_local) if isinstance(lb_left, LocalBounds) else lb_left
    rmin, rmax = (lb_right.u_min_local, lb_right.u_max_local) if isinstance(lb_right, LocalBounds) else lb_right
    return _out(_eta_local_vec(u_star, delta_F, alpha, lmin, lmax, rmin, rmax))


def local_bounds(averages, u_star_interfaces) -> LocalBounds:
    """Per-cell (min, max) of the cell average and its two interface states."""
    a = np.asarray(averages, dtype=float)
    s = np.asarray(u_star_interfaces, dtype=float)
    n = a.shape[0]
    left, right = s[:n], s[1:n + 1] if s.shape[0] > n else np.roll(s, -1)[:n]
    return LocalBounds(np.minimum(a, np.minimum(left, right)), np.maximum(a, np.maximum(left, right)))


def smooth_extrema_detector(field, bc, cell: int, extrapolated: bool = False) -> bool:
    """True when the cell profile is smooth (local bounds are relaxed there)."""
    from .grid import padded_view

    view = padded_view(field, bc, halo=2)
    pts = view.pt(np.arange(cell - 1, cell + 3))
    avg = view.avg(np.arange(cell - 1, cell + 2))
    if avg.ndim > 1:
        pts, avg = pts[:, 0], avg[:, 0]
    return bool(smooth_cell(pts[0], avg[0], pts[1], avg[1], pts[2], avg[2], pts[3], extrapolated))


def detection_factors(u0, a0, u1, a1, u2, a2, u3, dx=1.0, extrapolated=False):
    """(xi_L, xi_R) exactly as the piecewise definition, for diagnostics."""
    z = parabola_slope(u1, a1, u2, dx, 0.5)
    zl = parabola_slope(u1, a1, u2, dx, 0.0)
    zr = parabola_slope(u1, a1, u2, dx, 1.0)
    left, right = ((1.0, 2.0), (-1.0, 0.0)) if extrapolated else ((0.0, 1.0), (0.0, 1.0))
    env = [parabola_slope(u0, a0, u1, dx, xi) for xi in left]
    env += [parabola_slope(u2, a2, u3, dx, xi) for xi in right]
    zmin, zmax = min(env), max(env)
    scale = max(abs(u0), abs(u1), abs(u2), abs(u3), abs(a0), abs(a1), abs(a2), abs(zmin) * dx, abs(zmax) * dx)
    tol = 1e-13 * scale / dx

    def factor(ze):
        if abs(ze - z) <= tol:
            return 1.0
        if ze > z:
            return min(1.0, (zmax - z) / (ze - z))
        return min(1.0, (zmin - z) / (ze - z))

    return factor(zl), factor(zr)


@dataclass(frozen=True)
class GqlQuadraticPair:
    """Q(nu) = a1 nu^2 - 2 b1 nu + 2 c1 over |P(nu)| = |a2 nu^2 - 2 b2 nu + 2 c2|."""

    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float

    @classmethod
    def from_state(cls, u, delta):
        return cls(float(u[0]), float(u[1]), float(u[2]), float(delta[0]), float(delta[1]), float(delta[2]))


def gql_min_ratio(pair: GqlQuadraticPair) -> float:
    """inf over nu of Q(nu)/|P(nu)|; +inf when P vanishes identically."""
    r = gql_spectral_radius(pair.a1, pair.b1, pair.c1, pair.a2, pair.b2, pair.c2)
    if r < 0.0:
        raise InvalidStateError(f"numerator quadratic is not positive definite: {pair}")
    return math.inf if r == 0.0 else 1.0 / r


@nb.njit(cache=True)
def _euler_coefficients(states, deltas, speeds, out):
    for i in range(states.shape[0]):
        out[i] = euler_coefficient(states[i, 0], states[i, 1], states[i, 2],
                                   deltas[i, 0], deltas[i, 1], deltas[i, 2], speeds[i])


def euler_coefficients(states, deltas, speeds):
    """Positivity coefficient min(c_rho, c_e) for each (u*, delta, speed)."""
    states = np.ascontiguousarray(np.atleast_2d(states), dtype=float)
    deltas = np.ascontiguousarray(np.atleast_2d(deltas), dtype=float)
    speeds = np.ascontiguousarray(np.broadcast_to(np.asarray(speeds, dtype=float), states.shape[:1]))
    out = np.empty(states.shape[0])
    _euler_coefficients(states, deltas, speeds, out)
    bad = np.flatnonzero(out < 0)
    if bad.size:
        i = int(bad[0])
        raise BoundViolationError(f"intermediate state {states[i]} outside the invariant domain",
                                  location=i, kind="u_star", state=states[i])
    return out


def euler_blending(u_star, delta_F, alpha, u_star_L, delta_phi_right, beta_left,
                   u_star_R, delta_phi_left, beta_right) -> BlendingCoefficients:
    """Positivity-preserving (eta, theta_left, theta_right) for the Euler system."""
    return BlendingCoefficients(
        euler_coefficients(u_star, delta_F, alpha),
        euler_coefficients(u_star_L, delta_phi_right, beta_left),
        euler_coefficients(u_star_R, delta_phi_left, beta_right),
    )

# }}}
