"""Change of variables between primitive states and normal-form coordinates.

The forward chart maps (alpha_+, rho_pm, theta_pm) to (U1, U2, w, y_+, rho):
``w`` is the enthalpy-like slow coordinate ``<R><e>/<cv>``, ``U1 = f * dp`` is
the pressure-disequilibrium coordinate, and ``U2 = p/rho - w - U1`` absorbs
the remaining (temperature) disequilibrium.  At mechanical-thermal
equilibrium U1 = U2 = 0 and w = p/rho.  The velocity passes through
unchanged.

The inverse is computed by a damped Newton iteration on the five
non-velocity coordinates, seeded at the closed-form equilibrium chart point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartError, GuardError, InvalidStateError
from .thermo import GasConstants, PrimitiveState, mixture_view, validate_state

__all__ = [
    "NormalState",
    "ChartGuard",
    "CoefficientBundle",
    "default_guard",
    "phi_forward",
    "phi_inverse",
    "jacobian_det",
    "det_formula",
    "fd_jacobian",
    "coefficient_table",
    "full_coefficients",
    "leading_coefficients",
    "psi_chart",
    "psi_inverse",
    "equilibrium_seed",
    "dtheta_coupling",
    "disequilibrium_weight",
]


@dataclass
class NormalState:
    """Normal-form coordinates: fast pair (u1, u2), slow triple (w, y_plus, rho),
    and the velocity."""

    u1: float
    u2: float
    w: float
    y_plus: float
    rho: float
    u: float


@dataclass(frozen=True)
class ChartGuard:
    """Admissible disequilibrium box for the chart inversion.

    ``dp_max``/``dtheta_max`` bound the pressure and temperature differences
    implied by (u1, u2); inputs outside the box are rejected before iterating.
    The invertibility radius of the chart is nonconstructive, so these are
    practical defaults (20% of the unit background), not a sharp constant.
    """

    dp_max: float = 0.2
    dtheta_max: float = 0.2
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.dp_max <= 0 or self.dtheta_max <= 0:
            raise InvalidStateError("guard radii must be positive", field="guard")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise InvalidStateError("bad Newton controls", field="guard")


def default_guard() -> ChartGuard:
    return ChartGuard()


def disequilibrium_weight(v: PrimitiveState, g: GasConstants):
    """The factor f with U1 = f * (p_+ - p_-).

    f = (gamma_+ - gamma_-) alpha_+ alpha_- / (rho (gamma_+ alpha_- + gamma_- alpha_+)).
    """
    m = mixture_view(v, g)
    a_p, a_m = v.alpha_plus, v.alpha_minus
    return ((g.gamma_plus - g.gamma_minus) * a_p * a_m
            / (m.rho * (g.gamma_plus * a_m + g.gamma_minus * a_p)))


def dtheta_coupling(y_plus, g: GasConstants):
    """Coefficient c(y) in the identity u1 + u2 = c(y) * (theta_+ - theta_-)."""
    y_minus = 1.0 - y_plus
    cv_avg = y_plus * g.cv_plus + y_minus * g.cv_minus
    return ((g.gamma_plus - g.gamma_minus) * g.cv_plus * g.cv_minus
            * y_plus * y_minus / cv_avg)


def phi_forward(v: PrimitiveState, g: GasConstants, validate: bool = True) -> NormalState:
    """Map a primitive state to normal-form coordinates."""
    if validate:
        validate_state(v, g)
    m = mixture_view(v, g)
    w = m.r_avg * m.e_avg / m.cv_avg
    u1 = disequilibrium_weight(v, g) * m.delta_p
    u2 = m.p_mix / m.rho - w - u1
    return NormalState(u1=u1, u2=u2, w=w, y_plus=m.y_plus, rho=m.rho, u=v.u)


def psi_chart(alpha_plus, p, theta, g: GasConstants):
    """Equilibrium chart Psi: (alpha, p, theta) -> (y, rho, w)."""
    d = alpha_plus / g.r_plus + (1.0 - alpha_plus) / g.r_minus
    y = (alpha_plus / g.r_plus) / d
    rho = d * p / theta
    w = theta / d
    return y, rho, w


def psi_inverse(y_plus, rho, w, g: GasConstants):
    """Closed-form inverse of the equilibrium chart: (y, rho, w) -> (alpha, p, theta)."""
    r_avg = y_plus * g.r_plus + (1.0 - y_plus) * g.r_minus
    alpha = y_plus * g.r_plus / r_avg
    p = rho * w
    theta = w / r_avg
    return alpha, p, theta


def equilibrium_seed(y_plus, rho, w, g: GasConstants, u=0.0) -> PrimitiveState:
    """Primitive state with dp = dtheta = 0 matching the slow coordinates."""
    alpha, p, theta = psi_inverse(y_plus, rho, w, g)
    return PrimitiveState(
        alpha_plus=alpha,
        rho_plus=p / (g.r_plus * theta),
        rho_minus=p / (g.r_minus * theta),
        theta_plus=theta,
        theta_minus=theta,
        u=u,
    )


def _guard_check(n: NormalState, guard: ChartGuard, g: GasConstants) -> None:
    if not (n.w > 0.0 and n.rho > 0.0 and 0.0 < n.y_plus < 1.0):
        raise GuardError("slow coordinates (w, rho, y) outside their domain")
    seed = equilibrium_seed(n.y_plus, n.rho, n.w, g, u=n.u)
    dp_est = n.u1 / disequilibrium_weight(seed, g)
    dth_est = (n.u1 + n.u2) / dtheta_coupling(n.y_plus, g)
    if abs(dp_est) > guard.dp_max or abs(dth_est) > guard.dtheta_max:
        raise GuardError(
            f"disequilibrium (|dp|~{abs(dp_est):.3g}, |dtheta|~{abs(dth_est):.3g}) "
            f"outside guard ({guard.dp_max}, {guard.dtheta_max})")


_COORD_NAMES = ("u1", "u2", "w", "rho", "y_plus")


def _chart_vector(v: PrimitiveState, g: GasConstants) -> np.ndarray:
    n = phi_forward(v, g, validate=False)
    return np.array([n.u1, n.u2, n.w, n.rho, n.y_plus])


def _state_from_vars(x, u) -> PrimitiveState:
    return PrimitiveState(alpha_plus=x[0], rho_plus=x[1], rho_minus=x[2],
                          theta_plus=x[3], theta_minus=x[4], u=u)


def _vars_valid(x) -> bool:
    return bool(0.0 < x[0] < 1.0 and np.all(x[1:] > 0.0))


def fd_jacobian(v: PrimitiveState, g: GasConstants, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of the forward chart.

    Rows: (u1, u2, w, rho, y_plus); columns: (alpha_+, rho_+, rho_-,
    theta_+, theta_-).
    """
    x0 = np.array([v.alpha_plus, v.rho_plus, v.rho_minus, v.theta_plus, v.theta_minus],
                  dtype=float)
    jac = np.empty((5, 5))
    for j in range(5):
        h = rel_step * max(abs(x0[j]), 1e-8)
        xp, xm = x0.copy(), x0.copy()
        xp[j] += h
        xm[j] -= h
        fp = _chart_vector(_state_from_vars(xp, v.u), g)
        fm = _chart_vector(_state_from_vars(xm, v.u), g)
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def det_formula(gamma_plus, gamma_minus, cv_plus, cv_minus,
                alpha_plus, p_plus, p_minus, y_plus, rho, r_avg, cv_avg):
    """Closed-form chart determinant as a bare formula.

    Vanishes identically when gamma_plus == gamma_minus and in the
    alpha_plus -> {0, 1} limits.  The denominator carries rho^2: the
    rho^1 variant corresponds to a chart whose last coordinate is the phase
    mass rho*y instead of the mass fraction y.
    """
    a_m = 1.0 - alpha_plus
    y_minus = 1.0 - y_plus
    gp, gm = gamma_plus, gamma_minus
    return ((gp - gm) ** 2 * alpha_plus * a_m
            * (gm * alpha_plus * p_plus + gp * a_m * p_minus)
            / (gm * alpha_plus + gp * a_m) ** 2
            * cv_plus * cv_minus * y_plus * y_minus * r_avg
            / (rho ** 2 * cv_avg))


def jacobian_det(v: PrimitiveState, g: GasConstants):
    """Closed-form determinant of the forward chart (rows ordered as in
    :func:`fd_jacobian`); positive on the admissible set when gamma_+ > gamma_-."""
    m = mixture_view(v, g)
    return det_formula(g.gamma_plus, g.gamma_minus, g.cv_plus, g.cv_minus,
                       v.alpha_plus, m.p_plus, m.p_minus, m.y_plus, m.rho,
                       m.r_avg, m.cv_avg)


def phi_inverse(n: NormalState, g: GasConstants,
                guard: ChartGuard | None = None) -> PrimitiveState:
    """Invert the chart by damped Newton on the five non-velocity coordinates.

    Seeded at the equilibrium chart point (dp = dtheta = 0); the velocity
    passes through.  Raises GuardError for inputs outside the guard box and
    ChartError (carrying the last residual) on Newton failure.
    """
    guard = guard or default_guard()
    _guard_check(n, guard, g)

    target = np.array([n.u1, n.u2, n.w, n.rho, n.y_plus])
    scale = np.maximum(1.0, np.abs(target))
    seed = equilibrium_seed(n.y_plus, n.rho, n.w, g, u=n.u)
    x = np.array([seed.alpha_plus, seed.rho_plus, seed.rho_minus,
                  seed.theta_plus, seed.theta_minus])

    res = _chart_vector(_state_from_vars(x, n.u), g) - target
    err = np.max(np.abs(res) / scale)
    for _ in range(guard.newton_max_iter):
        if err <= guard.newton_tol:
            return _state_from_vars(x, n.u)
        jac = fd_jacobian(_state_from_vars(x, n.u), g)
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise ChartError(f"singular chart Jacobian: {exc}", residual=err) from exc
        damping = 1.0
        for _half in range(30):
            x_new = x - damping * step
            if _vars_valid(x_new):
                res_new = _chart_vector(_state_from_vars(x_new, n.u), g) - target
                err_new = np.max(np.abs(res_new) / scale)
                if err_new < err:
                    break
            damping *= 0.5
        else:
            raise ChartError("chart Newton stalled (no descent direction)",
                             residual=err)
        x, res, err = x_new, res_new, err_new
    if err <= guard.newton_tol:
        return _state_from_vars(x, n.u)
    raise ChartError(f"chart Newton did not converge (residual {err:.3e})",
                     residual=err, iterations=guard.newton_max_iter)


@dataclass(frozen=True)
class CoefficientBundle:
    """Damping coefficients (a1, a2) and div-u prefactors (s11, s22, s33) of the
    normal-form system, evaluated exactly at a state.

    a1/(eps*mu) damps u1, a2/mu damps u2; s_ii multiply div u in the
    equations of u1, u2, w respectively.  All five are strictly positive on
    the guard set.
    """

    a1: float
    a2: float
    s11: float
    s22: float
    s33: float


@dataclass(frozen=True)
class FullCoefficients:
    """CoefficientBundle plus the remainder couplings: c1 multiplies
    -(u1+u2)/mu in the u1 equation, b2 multiplies u1^2/(eps*mu) in the u2
    equation."""

    a1: float
    a2: float
    s11: float
    s22: float
    s33: float
    c1: float
    b2: float


def full_coefficients(v: PrimitiveState, g: GasConstants) -> FullCoefficients:
    """Exact coefficient functions of the normal-form system at a primitive state.

    These are the un-truncated expressions; at equilibrium they reduce to
    :func:`leading_coefficients` of the slow coordinates.
    """
    m = mixture_view(v, g)
    a_p, a_m = v.alpha_plus, v.alpha_minus
    gp, gm = g.gamma_plus, g.gamma_minus
    cvp, cvm = g.cv_plus, g.cv_minus
    yy = m.y_plus * m.y_minus
    den_a = gp * a_m + gm * a_p

    a1 = den_a * (m.p_minus + gm * a_p * m.delta_p / den_a ** 2)
    s11 = ((gp - gm) * (gp * m.p_plus - gm * m.p_minus - m.delta_p)
           * a_p * a_m / (m.rho * den_a))
    c1 = (m.cv_avg / (cvp * cvm * yy)
          * ((gp - 1.0) * a_m + (gm - 1.0) * a_p) / (m.rho * den_a))
    a2 = m.cv_avg / (m.rho * cvp * cvm * yy * den_a)
    den_s2 = gp * a_p + gm * a_m
    s22 = ((gp - gm) * cvp * cvm * yy / (den_s2 * m.cv_avg)
           * (m.p_mix * (gm * (gp - 1.0) * v.theta_plus / m.p_plus
                         - gp * (gm - 1.0) * v.theta_minus / m.p_minus)
              + a_p * a_m * m.cv_avg * m.delta_p / (cvp * cvm * yy * m.rho)))
    b2 = m.rho * gm / ((gp - gm) * a_m)
    s33 = (m.r_avg / m.cv_avg) * (m.p_mix / m.rho)
    return FullCoefficients(a1=a1, a2=a2, s11=s11, s22=s22, s33=s33, c1=c1, b2=b2)


def leading_coefficients(y_plus, rho, w, g: GasConstants) -> CoefficientBundle:
    """Leading (equilibrium) coefficient values as functions of the slow
    coordinates only; the corrections carried by :func:`full_coefficients`
    vanish here."""
    y_m = 1.0 - y_plus
    gp, gm = g.gamma_plus, g.gamma_minus
    r_avg = y_plus * g.r_plus + y_m * g.r_minus
    cv_avg = y_plus * g.cv_plus + y_m * g.cv_minus
    r_over_gamma = y_plus * g.r_plus / gp + y_m * g.r_minus / gm
    gamma_r = y_plus * gp * g.r_plus + y_m * gm * g.r_minus
    yy = y_plus * y_m
    a1 = (r_over_gamma / r_avg) * gp * gm * rho * w
    a2 = (cv_avg * r_avg / r_over_gamma) / (rho * g.cv_plus * g.cv_minus * yy * gp * gm)
    s11 = ((gp - gm) ** 2 / (r_avg * r_over_gamma)
           * (y_plus * g.r_plus / gp) * (y_m * g.r_minus / gm) * w)
    s22 = ((gp - gm) ** 2 / (cv_avg * gamma_r)) * g.cv_plus * g.cv_minus * yy * w
    s33 = (r_avg / cv_avg) * w
    return CoefficientBundle(a1=a1, a2=a2, s11=s11, s22=s22, s33=s33)


def coefficient_table(n: NormalState, g: GasConstants,
                      guard: ChartGuard | None = None) -> CoefficientBundle:
    """Exact (a1, a2, s11, s22, s33) at a normal-form state, recovered through
    the inverse chart."""
    v = phi_inverse(n, g, guard=guard)
    c = full_coefficients(v, g)
    return CoefficientBundle(a1=c.a1, a2=c.a2, s11=c.s11, s22=c.s22, s33=c.s33)
