"""Flux functions, wave speeds and Jacobian splittings.

Scalar models: linear advection f(u) = u, Burgers f(u) = u^2/2 and the
Buckley-Leverett flux f(u) = 4u^2 / (4u^2 + (1-u)^2).  The system model is
the ideal-gas Euler equations in conserved variables (rho, m, E).

The pointwise formulas are numba ufuncs / jitted functions so that the same
code serves the vectorised public API and the fused stage kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ConfigurationError, InvalidStateError

LINEAR, BURGERS, BUCKLEY, EULER = 0, 1, 2, 3

SCALAR_KINDS = {"linear_advection": LINEAR, "burgers": BURGERS, "buckley_leverett": BUCKLEY}

# Extrema of the Buckley-Leverett derivative: roots of 10u^3 - 15u^2 + 1.
_BL_CRIT = np.sort(np.roots([10.0, -15.0, 0.0, 1.0]).real)
_BL_C0, _BL_C1, _BL_C2 = (float(c) for c in _BL_CRIT)


# {{{ scalar pointwise kernels

@nb.vectorize(["f8(i8, f8)"], cache=True)
def scalar_flux_value(code, u):
    if code == LINEAR:
        return u
    if code == BURGERS:
        return 0.5 * u * u
    return 4.0 * u * u / (4.0 * u * u + (1.0 - u) * (1.0 - u))


@nb.vectorize(["f8(i8, f8)"], cache=True)
def scalar_derivative_value(code, u):
    if code == LINEAR:
        return 1.0
    if code == BURGERS:
        return u
    d = 4.0 * u * u + (1.0 - u) * (1.0 - u)
    return 8.0 * u * (1.0 - u) / (d * d)


@nb.vectorize(["f8(i8, f8, f8)"], cache=True)
def scalar_interval_speed(code, a, b):
    """max |f'| over the closed interval spanned by a and b."""
    s = max(abs(scalar_derivative_value(code, a)), abs(scalar_derivative_value(code, b)))
    if code == BUCKLEY:
        lo = min(a, b)
        hi = max(a, b)
        for c in (_BL_C0, _BL_C1, _BL_C2):
            if lo < c < hi:
                s = max(s, abs(scalar_derivative_value(code, c)))
    return s

# }}}


# {{{ Euler pointwise kernels

@nb.njit(cache=True)
def euler_internal(rho, m, E):
    return E - 0.5 * m * m / rho


@nb.njit(cache=True)
def euler_flux_tuple(rho, m, E, gamma):
    p = (gamma - 1.0) * (E - 0.5 * m * m / rho)
    v = m / rho
    return m, m * v + p, v * (E + p)


@nb.njit(cache=True)
def euler_speed_value(rho, m, E, gamma):
    p = (gamma - 1.0) * (E - 0.5 * m * m / rho)
    return abs(m / rho) + math.sqrt(gamma * p / rho)


@nb.njit(cache=True)
def euler_split_apply(rho, m, E, gamma, dl0, dl1, dl2, dr0, dr1, dr2):
    """Return J^+(u) dl and J^-(u) dr via the characteristic decomposition.

    J^+- = R Lambda^+- R^-1 with R the ideal-gas right eigenvectors for
    the eigenvalues (v-c, v, v+c).
    """
    v = m / rho
    p = (gamma - 1.0) * (E - 0.5 * m * v)
    c = math.sqrt(gamma * p / rho)
    h = (E + p) / rho
    b1 = (gamma - 1.0) / (c * c)
    b2 = 0.5 * b1 * v * v
    l1 = v - c
    l3 = v + c
    # characteristic amplitudes of dl, weighted by the positive eigenvalues
    w1 = 0.5 * ((b2 + v / c) * dl0 - (b1 * v + 1.0 / c) * dl1 + b1 * dl2) * max(l1, 0.0)
    w2 = ((1.0 - b2) * dl0 + b1 * v * dl1 - b1 * dl2) * max(v, 0.0)
    w3 = 0.5 * ((b2 - v / c) * dl0 - (b1 * v - 1.0 / c) * dl1 + b1 * dl2) * max(l3, 0.0)
    p0 = w1 + w2 + w3
    p1 = w1 * l1 + w2 * v + w3 * l3
    p2 = w1 * (h - v * c) + w2 * 0.5 * v * v + w3 * (h + v * c)
    w1 = 0.5 * ((b2 + v / c) * dr0 - (b1 * v + 1.0 / c) * dr1 + b1 * dr2) * min(l1, 0.0)
    w2 = ((1.0 - b2) * dr0 + b1 * v * dr1 - b1 * dr2) * min(v, 0.0)
    w3 = 0.5 * ((b2 - v / c) * dr0 - (b1 * v - 1.0 / c) * dr1 + b1 * dr2) * min(l3, 0.0)
    q0 = w1 + w2 + w3
    q1 = w1 * l1 + w2 * v + w3 * l3
    q2 = w1 * (h - v * c) + w2 * 0.5 * v * v + w3 * (h + v * c)
    return p0, p1, p2, q0, q1, q2

# }}}


@dataclass(frozen=True)
class JacobianSplit:
    j_plus: np.ndarray
    j_minus: np.ndarray


@dataclass(frozen=True)
class ScalarModel:
    kind: str

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ConfigurationError(f"unknown scalar model {self.kind!r}")

    @property
    def code(self) -> int:
        return SCALAR_KINDS[self.kind]

    n_components = 1
    gamma = 0.0

    def flux(self, u):
        return scalar_flux_value(self.code, np.asarray(u, dtype=float))

    def derivative(self, u):
        return scalar_derivative_value(self.code, np.asarray(u, dtype=float))

    def speed(self, u):
        return np.abs(self.derivative(u))

    def pair_speed(self, a, b):
        """Local wave-speed bound for the pair (a, b)."""
        return scalar_interval_speed(self.code, np.asarray(a, dtype=float), np.asarray(b, dtype=float))

    def jacobian_split(self, u) -> JacobianSplit:
        a = np.atleast_1d(self.derivative(u))
        return JacobianSplit(np.maximum(a, 0.0)[:, None, None], np.minimum(a, 0.0)[:, None, None])


@dataclass(frozen=True)
class EulerModel:
    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ConfigurationError("gamma must exceed 1")

    code = EULER
    n_components = 3

    @staticmethod
    def _split(u):
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != 3:
            raise InvalidStateError("Euler states need 3 components (rho, m, E)")
        return u[..., 0], u[..., 1], u[..., 2]

    def internal_energy(self, u):
        rho, m, E = self._split(u)
        return E - 0.5 * m * m / rho

    def pressure(self, u):
        return (self.gamma - 1.0) * self.internal_energy(u)

    def in_domain(self, u):
        rho, m, E = self._split(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (rho > 0) & (E - 0.5 * m * m / rho > 0)

    def check_domain(self, u, what="state"):
        ok = self.in_domain(u)
        if not np.all(ok):
            bad = np.argwhere(~np.atleast_1d(ok))[0]
            raise InvalidStateError(f"{what} outside the invariant domain at index {tuple(bad)}: "
                                    f"{np.atleast_2d(u)[bad[0]]}")

    def flux(self, u):
        rho, m, E = self._split(u)
        if np.any(rho <= 0):
            raise InvalidStateError("non-positive density in Euler flux")
        p = (self.gamma - 1.0) * (E - 0.5 * m * m / rho)
        v = m / rho
        return np.stack([m, m * v + p, v * (E + p)], axis=-1)

    def max_speed(self, u):
        self.check_domain(u)
        rho, m, E = self._split(u)
        p = self.pressure(u)
        return np.abs(m / rho) + np.sqrt(self.gamma * p / rho)

    def pair_speed(self, a, b):
        return np.maximum(self.max_speed(a), self.max_speed(b))

    def jacobian(self, u):
        rho, m, E = self._split(u)
        g = self.gamma
        v = m / rho
        h = (E + (g - 1.0) * (E - 0.5 * m * v)) / rho
        J = np.zeros(np.shape(rho) + (3, 3))
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = 0.5 * (g - 3.0) * v * v
        J[..., 1, 1] = (3.0 - g) * v
        J[..., 1, 2] = g - 1.0
        J[..., 2, 0] = v * (0.5 * (g - 1.0) * v * v - h)
        J[..., 2, 1] = h - (g - 1.0) * v * v
        J[..., 2, 2] = g * v
        return J

    def eigensystem(self, u):
        """Eigenvalues (v-c, v, v+c), right eigenvectors R and R^-1."""
        self.check_domain(u)
        rho, m, E = self._split(u)
        g = self.gamma
        v = m / rho
        p = self.pressure(u)
        c = np.sqrt(g * p / rho)
        h = (E + p) / rho
        lam = np.stack([v - c, v, v + c], axis=-1)
        one = np.ones_like(v)
        R = np.stack([
            np.stack([one, one, one], axis=-1),
            np.stack([v - c, v, v + c], axis=-1),
            np.stack([h - v * c, 0.5 * v * v, h + v * c], axis=-1),
        ], axis=-2)
        b1 = (g - 1.0) / (c * c)
        b2 = 0.5 * b1 * v * v
        L = np.stack([
            np.stack([0.5 * (b2 + v / c), -0.5 * (b1 * v + 1.0 / c), 0.5 * b1], axis=-1),
            np.stack([1.0 - b2, b1 * v, -b1], axis=-1),
            np.stack([0.5 * (b2 - v / c), -0.5 * (b1 * v - 1.0 / c), 0.5 * b1], axis=-1),
        ], axis=-2)
        return lam, R, L

    def jacobian_split(self, u) -> JacobianSplit:
        lam, R, L = self.eigensystem(u)
        jp = np.einsum("...ik,...k,...kj->...ij", R, np.maximum(lam, 0.0), L)
        jm = np.einsum("...ik,...k,...kj->...ij", R, np.minimum(lam, 0.0), L)
        return JacobianSplit(jp, jm)


def scalar_flux(model: ScalarModel, u):
    return model.flux(u)


def scalar_speed(model: ScalarModel, u):
    return model.speed(u)


def euler_flux(model: EulerModel, u):
    return model.flux(u)


def euler_max_speed(model: EulerModel, u):
    return model.max_speed(u)


def euler_jacobian_split(model: EulerModel, u) -> JacobianSplit:
    return model.jacobian_split(u)


def make_model(kind: str, gamma: float | None = None):
    if kind == "euler":
        return EulerModel(1.4 if gamma is None else gamma)
    return ScalarModel(kind)
