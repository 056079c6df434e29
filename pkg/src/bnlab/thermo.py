"""Perfect-gas closures, mixture algebra, and equilibrium/initial-data construction.

Two phases (labelled ``+`` and ``-``) share one velocity.  Each phase carries
its own density and temperature; pressures follow the perfect-gas law
``p = R rho theta`` and internal energies are ``e = cv theta``.  All state
fields may be scalars or equal-shape numpy arrays (one entry per grid cell).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

__all__ = [
    "GasConstants",
    "PrimitiveState",
    "MixtureView",
    "EquilibriumTriple",
    "AdmissibleBounds",
    "default_gas",
    "default_background",
    "phase_pressure",
    "mixture_view",
    "build_equilibrium",
    "build_initial_data",
    "eta_density",
    "mixture_entropy_density",
    "validate_state",
]


@dataclass(frozen=True)
class GasConstants:
    """Per-phase perfect-gas parameters.

    ``r_plus``/``r_minus`` are derived as ``cv * (gamma - 1)`` so the Mayer
    relation holds bit-for-bit.  ``gamma_plus != gamma_minus`` is required:
    with equal adiabatic exponents the pressure-disequilibrium coordinate of
    the normal form degenerates.
    """

    gamma_plus: float = 1.4
    gamma_minus: float = 1.2
    cv_plus: float = 1.0
    cv_minus: float = 1.0

    def __post_init__(self):
        if not (self.gamma_plus > 1.0 and self.gamma_minus > 1.0):
            raise InvalidStateError("adiabatic exponents must exceed 1", field="gamma")
        if self.gamma_plus == self.gamma_minus:
            raise InvalidStateError("gamma_plus and gamma_minus must differ", field="gamma")
        if not (self.cv_plus > 0.0 and self.cv_minus > 0.0):
            raise InvalidStateError("specific heats must be positive", field="cv")

    @property
    def r_plus(self) -> float:
        return self.cv_plus * (self.gamma_plus - 1.0)

    @property
    def r_minus(self) -> float:
        return self.cv_minus * (self.gamma_minus - 1.0)


def default_gas() -> GasConstants:
    """Default constants: gamma 1.4 / 1.2, unit heat capacities (R = 0.4 / 0.2)."""
    return GasConstants()


@dataclass
class PrimitiveState:
    """Physical unknowns at a point (or per cell): volume fraction of the
    ``+`` phase, phase densities, phase temperatures, and the common velocity."""

    alpha_plus: float | np.ndarray
    rho_plus: float | np.ndarray
    rho_minus: float | np.ndarray
    theta_plus: float | np.ndarray
    theta_minus: float | np.ndarray
    u: float | np.ndarray

    @property
    def alpha_minus(self):
        return 1.0 - self.alpha_plus

    def copy(self) -> "PrimitiveState":
        return PrimitiveState(*(np.array(f, copy=True) if isinstance(f, np.ndarray) else f
                                for f in (self.alpha_plus, self.rho_plus, self.rho_minus,
                                          self.theta_plus, self.theta_minus, self.u)))


@dataclass
class MixtureView:
    """Mass-averaged quantities derived from a primitive state."""

    rho: float | np.ndarray
    y_plus: float | np.ndarray
    y_minus: float | np.ndarray
    p_plus: float | np.ndarray
    p_minus: float | np.ndarray
    p_mix: float | np.ndarray
    theta_avg: float | np.ndarray
    delta_p: float | np.ndarray
    delta_theta: float | np.ndarray
    r_avg: float | np.ndarray
    cv_avg: float | np.ndarray
    e_avg: float | np.ndarray


@dataclass(frozen=True)
class EquilibriumTriple:
    """Mechanical-thermal equilibrium point: common pressure and temperature
    plus a volume fraction."""

    alpha_plus: float = 0.5
    p: float = 1.0
    theta: float = 1.0


def default_background() -> EquilibriumTriple:
    """Far-field constants used throughout: alpha=1/2, p=1, theta=1."""
    return EquilibriumTriple()


@dataclass(frozen=True)
class AdmissibleBounds:
    """Compact admissible set: alpha in [margin, 1-margin], densities and
    temperatures in [lo, hi]."""

    alpha_margin: float = 1e-4
    lo: float = 1e-6
    hi: float = 1e6


DEFAULT_BOUNDS = AdmissibleBounds()


def _check_range(value, lo, hi, name, errs):
    arr = np.asarray(value)
    bad = ~((arr >= lo) & (arr <= hi))
    if np.any(bad):
        idx = int(np.argmax(bad)) if arr.ndim else None
        val = arr.flat[np.argmax(bad)] if arr.ndim else float(arr)
        errs.append((name, idx, val))


def validate_state(v: PrimitiveState, g: GasConstants,
                   bounds: AdmissibleBounds = DEFAULT_BOUNDS) -> None:
    """Raise InvalidStateError (with field name and cell index) if ``v`` leaves
    the admissible set."""
    errs = []
    _check_range(v.alpha_plus, bounds.alpha_margin, 1.0 - bounds.alpha_margin,
                 "alpha_plus", errs)
    _check_range(v.rho_plus, bounds.lo, bounds.hi, "rho_plus", errs)
    _check_range(v.rho_minus, bounds.lo, bounds.hi, "rho_minus", errs)
    _check_range(v.theta_plus, bounds.lo, bounds.hi, "theta_plus", errs)
    _check_range(v.theta_minus, bounds.lo, bounds.hi, "theta_minus", errs)
    if errs:
        name, idx, val = errs[0]
        where = "" if idx is None else f" at cell {idx}"
        raise InvalidStateError(f"{name}={val!r}{where} outside admissible range",
                                field=name, index=idx)


def phase_pressure(rho, theta, phase: str, g: GasConstants):
    """Perfect-gas pressure ``R_phase * rho * theta`` for phase '+' or '-'."""
    rho = np.asarray(rho, dtype=float) if isinstance(rho, np.ndarray) else rho
    if np.any(np.asarray(rho) <= 0.0) or np.any(np.asarray(theta) <= 0.0):
        raise InvalidStateError("phase_pressure needs rho > 0 and theta > 0",
                                field="rho" if np.any(np.asarray(rho) <= 0.0) else "theta")
    r = {"+": g.r_plus, "-": g.r_minus}[phase]
    return r * rho * theta


def mixture_view(v: PrimitiveState, g: GasConstants) -> MixtureView:
    """All mass-averaged quantities of a state.

    ``y_pm = alpha_pm rho_pm / rho`` and ``<f> = y_+ f_+ + y_- f_-``.
    """
    a_p, a_m = v.alpha_plus, v.alpha_minus
    rho = a_p * v.rho_plus + a_m * v.rho_minus
    y_p = a_p * v.rho_plus / rho
    y_m = a_m * v.rho_minus / rho
    p_p = g.r_plus * v.rho_plus * v.theta_plus
    p_m = g.r_minus * v.rho_minus * v.theta_minus
    return MixtureView(
        rho=rho,
        y_plus=y_p,
        y_minus=y_m,
        p_plus=p_p,
        p_minus=p_m,
        p_mix=a_p * p_p + a_m * p_m,
        theta_avg=a_p * v.theta_plus + a_m * v.theta_minus,
        delta_p=p_p - p_m,
        delta_theta=v.theta_plus - v.theta_minus,
        r_avg=y_p * g.r_plus + y_m * g.r_minus,
        cv_avg=y_p * g.cv_plus + y_m * g.cv_minus,
        e_avg=y_p * g.cv_plus * v.theta_plus + y_m * g.cv_minus * v.theta_minus,
    )


def build_equilibrium(eq: EquilibriumTriple, u, g: GasConstants) -> PrimitiveState:
    """State with common pressure and temperature: rho_pm = p / (R_pm theta).

    The result has delta_p = delta_theta = 0 exactly.
    """
    alpha = eq.alpha_plus
    return PrimitiveState(
        alpha_plus=alpha,
        rho_plus=eq.p / (g.r_plus * eq.theta),
        rho_minus=eq.p / (g.r_minus * eq.theta),
        theta_plus=eq.theta,
        theta_minus=eq.theta,
        u=u,
    )


def build_initial_data(alpha0, p0, theta0, u0, dp0, dtheta0, g: GasConstants) -> PrimitiveState:
    """Initial data from mean profiles (alpha0, p0, theta0, u0) and
    disequilibrium perturbations (dp0, dtheta0).

    The split is weighted by the opposite volume fraction so that the
    resulting state reproduces (dp0, dtheta0) pointwise::

        theta_+ = theta0 + alpha_- dtheta0      R_+ rho_+ theta_+ = p0 + alpha_- dp0
        theta_- = theta0 - alpha_+ dtheta0      R_- rho_- theta_- = p0 - alpha_+ dp0

    Rejects (with the offending cell index) any pointwise nonpositive
    temperature, pressure, or density.
    """
    alpha0 = np.asarray(alpha0, dtype=float) if isinstance(alpha0, np.ndarray) else alpha0
    a_m = 1.0 - alpha0
    th_p = theta0 + a_m * dtheta0
    th_m = theta0 - alpha0 * dtheta0
    pp = p0 + a_m * dp0
    pm = p0 - alpha0 * dp0
    for name, fieldv in (("theta_plus", th_p), ("theta_minus", th_m),
                         ("p_plus", pp), ("p_minus", pm)):
        arr = np.asarray(fieldv)
        if np.any(arr <= 0.0):
            idx = int(np.argmax(arr <= 0.0)) if arr.ndim else None
            where = "" if idx is None else f" at cell {idx}"
            raise InvalidStateError(
                f"initial data gives nonpositive {name}{where}", field=name, index=idx)
    return PrimitiveState(
        alpha_plus=alpha0,
        rho_plus=pp / (g.r_plus * th_p),
        rho_minus=pm / (g.r_minus * th_m),
        theta_plus=th_p,
        theta_minus=th_m,
        u=u0,
    )


def _h(x):
    """h(x) = x - 1 - ln x, nonnegative with minimum h(1) = 0."""
    return x - 1.0 - np.log(x)


def mixture_entropy_density(v: PrimitiveState, g: GasConstants):
    """rho <s> with the phase entropies s_pm = cv_pm ln theta_pm - R_pm ln rho_pm."""
    m = mixture_view(v, g)
    s_p = g.cv_plus * np.log(v.theta_plus) - g.r_plus * np.log(v.rho_plus)
    s_m = g.cv_minus * np.log(v.theta_minus) - g.r_minus * np.log(v.rho_minus)
    return m.rho * (m.y_plus * s_p + m.y_minus * s_m)


def eta_density(v: PrimitiveState, g: GasConstants):
    """Nonnegative Lyapunov density rho * eta.

    eta = <cv h(theta)> + <R h(1/rho_pm)> + u^2/2 + <gamma cv>
          + (alpha_- R_+ + alpha_+ R_-) / rho.

    With this choice rho*eta == rho*E - rho*<s> + (R_+ + R_-) identically, so
    the integral over a periodic domain decays exactly at the relaxation
    dissipation rate.  (The last term is sometimes quoted with the gas
    constants inverted, which breaks that identity.)
    """
    m = mixture_view(v, g)
    haux = (m.y_plus * g.cv_plus * _h(v.theta_plus)
            + m.y_minus * g.cv_minus * _h(v.theta_minus)
            + m.y_plus * g.r_plus * _h(1.0 / v.rho_plus)
            + m.y_minus * g.r_minus * _h(1.0 / v.rho_minus))
    gamma_cv = (m.y_plus * g.gamma_plus * g.cv_plus
                + m.y_minus * g.gamma_minus * g.cv_minus)
    eta = (haux + 0.5 * v.u ** 2 + gamma_cv
           + (v.alpha_minus * g.r_plus + v.alpha_plus * g.r_minus) / m.rho)
    return m.rho * eta
