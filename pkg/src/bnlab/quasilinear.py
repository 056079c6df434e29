"""Assembly of the quasilinear normal-form system and its diagonal symmetrizer.

The six-field system (d = 1) in the coordinates U = (u1, u2, w, y, rho, u)
reads  dU/dt + H dU/dx + D U = R  with

* ``H = u I + L + C``: transport plus the div-u couplings (rows 1-3, column
  6), the mass coupling (row 5, column 6), and the velocity row
  (1, 1, 1, 0, p/rho^2) from grad(p)/rho = grad(u1+u2+w) + (p/rho^2) grad rho;
* ``D = diag(a1/(eps mu), a2/mu, 0, ...)``: the stiff damping, carrying the
  full state-dependent coefficients so the remainder vanishes identically at
  equilibrium;
* ``R``: nonzero in the first two entries only; entry 2 has no term linear in
  u2/(eps mu) and vanishes whenever u1 = 0.

The limit system in (w, y, rho, u) is the lower-right block of H evaluated at
(u1, u2) = (0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chgvar import (ChartGuard, NormalState, full_coefficients,
                     leading_coefficients, phi_inverse)
from .errors import InvalidStateError, SymmetrizeError
from .thermo import GasConstants

__all__ = [
    "RelaxParams",
    "SystemMatrices",
    "Symmetrizer",
    "assemble_system",
    "build_symmetrizer",
    "assemble_kapila",
]


@dataclass(frozen=True)
class RelaxParams:
    """Relaxation scales: eps*mu drives pressure equilibration, mu thermal.

    ``eps`` is a fixed small constant, ``mu <= 1`` is the parameter sent to
    zero in the relaxation limit.
    """

    eps: float = 1e-2
    mu: float = 1e-3
    eps_cap: float = 1e-2

    def __post_init__(self):
        if not (0.0 < self.eps <= self.eps_cap):
            raise InvalidStateError(f"eps must lie in (0, {self.eps_cap}]", field="eps")
        if not (0.0 < self.mu <= 1.0):
            raise InvalidStateError("mu must lie in (0, 1]", field="mu")


@dataclass
class SystemMatrices:
    """Transport matrix, diagonal damping, and remainder vector at one state."""

    h: np.ndarray
    d_relax: np.ndarray
    r_remainder: np.ndarray


@dataclass
class Symmetrizer:
    """Positive diagonal S with S @ H symmetric."""

    diag_entries: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diag_entries)


def _velocity_components(u, dim):
    if dim == 1:
        return [float(u)]
    u = np.asarray(u, dtype=float).ravel()
    if u.size != dim:
        raise InvalidStateError(f"velocity needs {dim} components", field="u")
    return list(u)


def _transport_matrix(uvec, s11, s22, s33, rho, p, dim):
    n = 5 + dim
    hs = []
    for j in range(dim):
        h = np.zeros((n, n))
        np.fill_diagonal(h, uvec[j])
        col = 5 + j
        h[0, col] = s11
        h[1, col] = s22
        h[2, col] = s33
        h[4, col] = rho
        h[col, 0] = 1.0
        h[col, 1] = 1.0
        h[col, 2] = 1.0
        h[col, 4] = p / rho ** 2
        hs.append(h)
    return hs


def assemble_system(n: NormalState, params: RelaxParams, g: GasConstants,
                    guard: ChartGuard | None = None, dim: int = 1) -> SystemMatrices:
    """Exact system matrices at a normal-form state.

    The coefficients carry their full state dependence (recovered through the
    inverse chart); at equilibrium they coincide with the closed-form leading
    values and the remainder is exactly zero.
    """
    v = phi_inverse(n, g, guard=guard)
    c = full_coefficients(v, g)
    uvec = _velocity_components(n.u, dim)
    p = n.rho * (n.u1 + n.u2 + n.w)

    hs = _transport_matrix(uvec, c.s11, c.s22, c.s33, n.rho, p, dim)

    size = 5 + dim
    d_relax = np.zeros(size)
    d_relax[0] = c.a1 / (params.eps * params.mu)
    d_relax[1] = c.a2 / params.mu

    r = np.zeros(size)
    r[0] = -c.c1 * (n.u1 + n.u2) / params.mu
    r[1] = (c.b2 * n.u1 ** 2 / (params.eps * params.mu)
            - c.a2 * n.u1 / params.mu)

    h = hs[0] if dim == 1 else np.stack(hs)
    return SystemMatrices(h=h, d_relax=np.diag(d_relax), r_remainder=r)


def build_symmetrizer(n: NormalState, g: GasConstants,
                      guard: ChartGuard | None = None, dim: int = 1) -> Symmetrizer:
    """Diagonal symmetrizer from the symmetry constraints.

    With the normalization s6 = rho (s_{5+j} = rho for every velocity row)
    and s4 = 1, pairing rows 1-3 with the velocity column forces
    s_i = rho / s_ii, and the (rho, u) pair forces s5 = p/rho^2.  The printed
    diag(1/a1, 1/a2, 1/a3, 1, p/rho^2, rho) misses the rho factor on the
    first three entries and does not satisfy the constraints.
    """
    v = phi_inverse(n, g, guard=guard)
    c = full_coefficients(v, g)
    if min(c.s11, c.s22, c.s33) <= 0.0:
        raise SymmetrizeError(
            f"nonpositive div-u prefactor (s11={c.s11:.3g}, s22={c.s22:.3g}, "
            f"s33={c.s33:.3g}); state left the symmetrizable region")
    p = n.rho * (n.u1 + n.u2 + n.w)
    entries = np.concatenate([
        [n.rho / c.s11, n.rho / c.s22, n.rho / c.s33, 1.0, p / n.rho ** 2],
        np.full(dim, n.rho),
    ])
    if np.min(entries) <= 0.0:
        raise SymmetrizeError("symmetrizer lost positive definiteness")
    return Symmetrizer(diag_entries=entries)


def assemble_kapila(w, rho, y, u, g: GasConstants, dim: int = 1) -> SystemMatrices:
    """Transport matrix of the one-pressure one-temperature limit system in
    (w, y, rho, u); no damping, no remainder.

    Equals the lower-right block of :func:`assemble_system`'s H at
    (u1, u2) = (0, 0) with the same slow coordinates (p = rho w there).
    """
    if not (w > 0.0 and rho > 0.0 and 0.0 < y < 1.0):
        raise InvalidStateError("kapila state needs w, rho > 0 and y in (0,1)",
                                field="kapila")
    lead = leading_coefficients(y, rho, w, g)
    uvec = _velocity_components(u, dim)
    size = 3 + dim
    hs = []
    for j in range(dim):
        h = np.zeros((size, size))
        np.fill_diagonal(h, uvec[j])
        col = 3 + j
        h[0, col] = lead.s33
        h[2, col] = rho
        h[col, 0] = 1.0
        h[col, 2] = w / rho
        hs.append(h)
    h = hs[0] if dim == 1 else np.stack(hs)
    size_d = np.zeros(size)
    return SystemMatrices(h=h, d_relax=np.diag(size_d), r_remainder=np.zeros(size))
