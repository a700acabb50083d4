"""Per-interface and per-node building blocks of the scheme (vectorised numpy).

Interfaces are indexed like nodes: interface j sits at x_j between cell
j-1 and cell j.  Cell c spans [x_c, x_{c+1}].  All functions accept scalar
states as 1D arrays and Euler states as (n, 3) arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BoundaryCondition, DoFField, padded_view


def _speed_like(s, u):
    s = np.asarray(s, dtype=float)
    u = np.asarray(u)
    return s[..., None] if u.ndim > s.ndim else s


def llf_flux(model, uL, uR, alpha):
    """Local Lax-Friedrichs flux (f(uL) + f(uR))/2 - alpha/2 (uR - uL)."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    a = _speed_like(alpha, uL)
    return 0.5 * (model.flux(uL) + model.flux(uR)) - 0.5 * a * (uR - uL)


@dataclass(frozen=True)
class LocalSpeeds:
    alpha: np.ndarray  # per interface
    beta_left: np.ndarray  # per node, pairs u_j with the cell on its left
    beta_right: np.ndarray  # per node, pairs u_j with the cell on its right


def neighbour_states(field: DoFField, bc: BoundaryCondition):
    """Return (ubar_left, ubar_right, u_prev, u_next) for every node j."""
    view = padded_view(field, bc, halo=2)
    j = np.arange(field.n_nodes)
    return view.avg(j - 1), view.avg(j), view.pt(j - 1), view.pt(j + 1)


def local_speeds(field: DoFField, model, bc: BoundaryCondition) -> LocalSpeeds:
    ubl, ubr, _, _ = neighbour_states(field, bc)
    u = field.points
    return LocalSpeeds(model.pair_speed(ubl, ubr), model.pair_speed(u, ubl), model.pair_speed(u, ubr))


def low_order_residuals(model, u_j, ubar_left, ubar_right, beta_left, beta_right):
    """LLF-type residuals (phi_right_lo, phi_left_lo) of the point update."""
    u_j = np.asarray(u_j, dtype=float)
    ubl = np.asarray(ubar_left, dtype=float)
    ubr = np.asarray(ubar_right, dtype=float)
    bl = _speed_like(beta_left, u_j)
    br = _speed_like(beta_right, u_j)
    fu = model.flux(u_j)
    phi_right = 0.5 * (fu - model.flux(ubl)) - 0.5 * bl * (ubl - u_j)
    phi_left = 0.5 * (model.flux(ubr) - fu) - 0.5 * br * (ubr - u_j)
    return phi_right, phi_left


# {{{ parabolic interpretation

def basis(xi):
    """Values of (l_0, l_1/2, l_1) at local coordinate xi in [0, 1]."""
    xi = np.asarray(xi, dtype=float)
    return (1.0 - xi) * (1.0 - 3.0 * xi), 6.0 * xi * (1.0 - xi), xi * (3.0 * xi - 2.0)


def parabola_value(u_left, ubar, u_right, xi):
    l0, lh, l1 = basis(xi)
    return u_left * l0 + ubar * lh + u_right * l1


def parabola_slope(u_left, ubar, u_right, dx, xi):
    """d/dx of the cell parabola at local coordinate xi (any real xi)."""
    return (u_left * (6.0 * xi - 4.0) + ubar * (6.0 - 12.0 * xi) + u_right * (6.0 * xi - 2.0)) / dx


def parabola_deriv(u_left, ubar, u_right, dx, endpoint):
    if endpoint == "left":
        return 2.0 / dx * (-2.0 * u_left + 3.0 * ubar - u_right)
    if endpoint == "right":
        return 2.0 / dx * (u_left - 3.0 * ubar + 2.0 * u_right)
    raise ValueError(f"endpoint must be 'left' or 'right', not {endpoint!r}")

# }}}


def high_order_residuals(model, u_prev, ubar_left, u_j, ubar_right, u_next):
    """Upwinded parabola-slope residuals (phi_right_hi, phi_left_hi).

    The bracketed differences are formed first and then multiplied by the
    split Jacobian at u_j (a^+- for scalars, J^+- for systems).
    """
    u_j = np.asarray(u_j, dtype=float)
    left = np.asarray(u_prev) - 3.0 * np.asarray(ubar_left) + 2.0 * u_j
    right = -2.0 * u_j + 3.0 * np.asarray(ubar_right) - np.asarray(u_next)
    split = model.jacobian_split(u_j)
    if u_j.ndim <= 1 and model.n_components == 1:
        jp = split.j_plus[:, 0, 0].reshape(u_j.shape)
        jm = split.j_minus[:, 0, 0].reshape(u_j.shape)
        return jp * left, jm * right
    return (np.einsum("...ij,...j->...i", split.j_plus, left),
            np.einsum("...ij,...j->...i", split.j_minus, right))


def _riemann_average(model, a, b, s):
    """(a + b)/2 - (f(b) - f(a))/(2 s), the mean of a and b where s == 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = _speed_like(s, a)
    df = model.flux(b) - model.flux(a)
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, 0.5 * (a + b) - 0.5 * df / safe, 0.5 * (a + b))


def intermediate_state(model, ubar_left, ubar_right, alpha):
    """First-order Riemann intermediate state u*_j of an interface."""
    return _riemann_average(model, ubar_left, ubar_right, alpha)


def point_intermediate_states(model, u_j, ubar_left, ubar_right, beta_left, beta_right):
    """(u*^L_j, u*^R_j) of the point update."""
    return (_riemann_average(model, ubar_left, u_j, beta_left),
            _riemann_average(model, u_j, ubar_right, beta_right))


@dataclass(frozen=True)
class InterfaceQuantities:
    f_lo: np.ndarray
    f_hi: np.ndarray
    alpha: np.ndarray
    u_star: np.ndarray

    @property
    def delta(self):
        return self.f_hi - self.f_lo


@dataclass(frozen=True)
class NodeResiduals:
    phi_right_lo: np.ndarray
    phi_left_lo: np.ndarray
    phi_right_hi: np.ndarray
    phi_left_hi: np.ndarray
    beta_left: np.ndarray
    beta_right: np.ndarray
    u_star_L: np.ndarray
    u_star_R: np.ndarray


def interface_quantities(field: DoFField, model, bc: BoundaryCondition) -> InterfaceQuantities:
    ubl, ubr, _, _ = neighbour_states(field, bc)
    alpha = model.pair_speed(ubl, ubr)
    return InterfaceQuantities(
        f_lo=llf_flux(model, ubl, ubr, alpha),
        f_hi=model.flux(field.points),
        alpha=alpha,
        u_star=intermediate_state(model, ubl, ubr, alpha),
    )


def node_residuals(field: DoFField, model, bc: BoundaryCondition) -> NodeResiduals:
    ubl, ubr, upv, unx = neighbour_states(field, bc)
    u = field.points
    bl = model.pair_speed(u, ubl)
    br = model.pair_speed(u, ubr)
    rlo, llo = low_order_residuals(model, u, ubl, ubr, bl, br)
    rhi, lhi = high_order_residuals(model, upv, ubl, u, ubr, unx)
    usl, usr = point_intermediate_states(model, u, ubl, ubr, bl, br)
    return NodeResiduals(rlo, llo, rhi, lhi, bl, br, usl, usr)
