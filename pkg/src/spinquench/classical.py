"""Scaled classical Hamiltonians, trajectories, Poincare sections, actions.

With scaled variables jz~ = jz/J, (q_e, p_e) = (q, p)/sqrt(J), the classical
dynamics of both models is independent of J:

    h_lmg = jz~ + (1 - jz~^2)/2 (gx cos^2 phi + gy sin^2 phi)
    h_d   = (w/2)(p_e^2 + q_e^2) + w0 jz~ + 2 g sqrt(1 - jz~^2) q_e cos phi

The LMG action I(eps) = loop integral of jz~ dphi over the orbit at energy
eps feeds the semiclassical frequency w_cl = 2 pi / (dI/deps) and the
anharmonicity e2 = -(w_cl^3 / 4 pi J) d2I/deps2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .hamiltonians import Model, ModelSpec

__all__ = [
    "ClassicalState", "PoincareSection", "PoleError",
    "h_classical", "gradient", "integrate", "poincare", "poincare_seeds",
    "action", "omega_classical", "e2_semiclassical", "convergence_study",
    "lmg_kappa",
]

POLE_GUARD = 1.0 - 1e-9


class PoleError(RuntimeError):
    """Trajectory hit the |jz/J| = 1 pole where the canonical chart breaks."""


@dataclass(frozen=True)
class ClassicalState:
    """Phase-space point in scaled variables; (qe, pe) unused for LMG."""

    phi: float
    jz: float
    qe: float = 0.0
    pe: float = 0.0

    def __post_init__(self):
        if abs(self.jz) > 1:
            raise ValueError(f"|jz/J| must be <= 1, got {self.jz}")

    def as_array(self, model: Model) -> np.ndarray:
        if model is Model.LMG:
            return np.array([self.phi, self.jz])
        return np.array([self.phi, self.jz, self.qe, self.pe])


@dataclass(frozen=True)
class PoincareSection:
    """Section points (phi, jz/J) at p_e = 0 upward crossings."""

    energy: float
    points: np.ndarray          # shape (n, 3): seed_id, phi, jz
    energy_drift: float
    rejected_seeds: list = None


def lmg_kappa(spec: ModelSpec) -> float:
    """Dynamically irrelevant constant J (gx + gy) / (2 (2J - 1))."""
    return spec.j * (spec.gamma_x + spec.gamma_y) / (2.0 * (2.0 * spec.j - 1.0))


def _g_phi(spec: ModelSpec, phi):
    return spec.gamma_x * np.cos(phi) ** 2 + spec.gamma_y * np.sin(phi) ** 2


def h_classical(state: ClassicalState, spec: ModelSpec,
                include_kappa: bool = False) -> float:
    """Scaled classical energy eps = h(state)."""
    if spec.model is Model.LMG:
        h = state.jz + 0.5 * (1.0 - state.jz**2) * _g_phi(spec, state.phi)
        if include_kappa:
            h += lmg_kappa(spec) / spec.j
        return float(h)
    return float(
        0.5 * spec.omega * (state.pe**2 + state.qe**2)
        + spec.omega0 * state.jz
        + 2.0 * spec.gamma * np.sqrt(1.0 - state.jz**2) * state.qe * np.cos(state.phi)
    )


def gradient(state: ClassicalState, spec: ModelSpec) -> np.ndarray:
    """Analytic phase-space gradient of h, ordered like as_array."""
    jz, phi = state.jz, state.phi
    if spec.model is Model.LMG:
        dgdphi = (spec.gamma_y - spec.gamma_x) * 2.0 * np.sin(phi) * np.cos(phi) * 0.5
        dh_dphi = 0.5 * (1.0 - jz**2) * 2.0 * dgdphi
        dh_djz = 1.0 - jz * _g_phi(spec, phi)
        return np.array([dh_dphi, dh_djz])
    s = np.sqrt(max(1.0 - jz**2, 0.0))
    qe, pe = state.qe, state.pe
    dh_dphi = -2.0 * spec.gamma * s * qe * np.sin(phi)
    if s < 1e-15:
        raise PoleError("gradient undefined at |jz/J| = 1")
    dh_djz = spec.omega0 - 2.0 * spec.gamma * jz / s * qe * np.cos(phi)
    dh_dqe = spec.omega * qe + 2.0 * spec.gamma * s * np.cos(phi)
    dh_dpe = spec.omega * pe
    return np.array([dh_dphi, dh_djz, dh_dqe, dh_dpe])


def _rhs(spec: ModelSpec):
    if spec.model is Model.LMG:
        gx, gy = spec.gamma_x, spec.gamma_y

        def rhs(t, y):
            phi, jz = y
            g = gx * np.cos(phi) ** 2 + gy * np.sin(phi) ** 2
            dg = (gy - gx) * np.sin(2.0 * phi)
            return [1.0 - jz * g, -0.5 * (1.0 - jz**2) * dg]

        return rhs
    w, w0, g = spec.omega, spec.omega0, spec.gamma

    def rhs(t, y):
        phi, jz, qe, pe = y
        s2 = 1.0 - jz * jz
        if s2 <= 1.0 - POLE_GUARD**2:
            raise PoleError(f"trajectory reached |jz/J| = {abs(jz):.12f}")
        s = np.sqrt(s2)
        cphi, sphi = np.cos(phi), np.sin(phi)
        return [
            w0 - 2.0 * g * jz / s * qe * cphi,   # dphi/dt
            2.0 * g * s * qe * sphi,             # djz/dt
            w * pe,                              # dqe/dt
            -(w * qe + 2.0 * g * s * cphi),      # dpe/dt
        ]

    return rhs


def integrate(state0: ClassicalState, spec: ModelSpec, t_final: float,
              t_eval: np.ndarray | None = None, rtol: float = 1e-11,
              atol: float = 1e-12, events=None):
    """Adaptive high-order integration of Hamilton's equations.

    Returns the scipy solution object (dense output enabled).  Energy drift
    beyond 1e-9 or a pole approach raises.
    """
    if abs(state0.jz) > POLE_GUARD:
        raise PoleError(f"initial |jz/J| = {abs(state0.jz)} within the pole guard")
    y0 = state0.as_array(spec.model)
    sol = solve_ivp(_rhs(spec), (0.0, t_final), y0, method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol, dense_output=True,
                    events=events)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    e0 = h_classical(state0, spec)
    yf = sol.y[:, -1]
    ef = h_classical(ClassicalState(*yf), spec)
    drift = abs(ef - e0)
    if drift > 1e-9 * max(abs(e0), 1.0):
        raise RuntimeError(f"energy drift {drift:.3e} exceeds 1e-9 budget")
    return sol


def poincare_seeds(spec: ModelSpec, energy: float, phi_values: np.ndarray,
                   jz_values: np.ndarray) -> tuple[list[ClassicalState], list[tuple]]:
    """Seeds on the energy shell at p_e = 0, solving h = eps for q_e.

    Each (phi, jz) grid point yields the smaller-|q_e| real root when one
    exists; points without a real root are reported as rejected.
    """
    seeds, rejected = [], []
    w, w0, g = spec.omega, spec.omega0, spec.gamma
    for phi in phi_values:
        for jz in jz_values:
            b = 2.0 * g * np.sqrt(max(1.0 - jz**2, 0.0)) * np.cos(phi)
            c = w0 * jz - energy
            disc = b * b - 2.0 * w * c
            if disc < 0:
                rejected.append((float(phi), float(jz), "no real q_e root"))
                continue
            qe = (-b + np.sqrt(disc)) / w
            if abs((-b - np.sqrt(disc)) / w) < abs(qe):
                qe = (-b - np.sqrt(disc)) / w
            seeds.append(ClassicalState(phi=float(phi), jz=float(jz), qe=float(qe)))
    return seeds, rejected


def poincare(spec: ModelSpec, energy: float, seeds: list[ClassicalState],
             crossings: int = 100, t_max: float | None = None) -> PoincareSection:
    """Dicke Poincare section: p_e = 0, dp_e/dt > 0 crossings, (phi, jz) plane.

    Upward p_e crossings occur about once per bosonic period 2 pi / omega,
    so by default the integration span is sized from the requested number
    of crossings (with headroom) to keep the energy-drift budget intact.
    """
    if spec.model is not Model.DICKE:
        raise ValueError("Poincare sections are defined for the Dicke model here")
    if t_max is None:
        t_max = 4.0 * np.pi * (crossings + 10) / spec.omega
    rows = []
    max_drift = 0.0
    rejected = []

    def event(t, y):
        return y[3]
    event.direction = 1.0

    for sid, seed in enumerate(seeds):
        e0 = h_classical(seed, spec)
        if abs(e0 - energy) > 1e-8:
            rejected.append((sid, f"seed off shell by {abs(e0 - energy):.3e}"))
            continue
        try:
            sol = integrate(seed, spec, t_max, rtol=1e-11, atol=1e-12,
                            events=event)
        except (PoleError, RuntimeError) as exc:
            rejected.append((sid, str(exc)))
            continue
        pts = sol.y_events[0][:crossings]
        for phi, jz, qe, pe in pts:
            e_pt = h_classical(ClassicalState(phi=phi, jz=jz, qe=qe, pe=pe), spec)
            max_drift = max(max_drift, abs(e_pt - energy))
            rows.append((sid, np.mod(phi + np.pi, 2 * np.pi) - np.pi, jz))
    points = np.array(rows) if rows else np.empty((0, 3))
    return PoincareSection(energy=energy, points=points,
                           energy_drift=float(max_drift), rejected_seeds=rejected)


def _lmg_jz_branches(spec: ModelSpec, energy: float, phi: float):
    """Roots of (g/2) jz^2 - jz + (eps - g/2) = 0 and the discriminant."""
    g = _g_phi(spec, phi)
    if abs(g) < 1e-14:
        return energy, energy, 1.0
    disc = 1.0 - 2.0 * g * energy + g * g
    if disc < 0:
        return np.nan, np.nan, disc
    r = np.sqrt(disc)
    return (1.0 - r) / g, (1.0 + r) / g, disc


def action(spec: ModelSpec, energy: float) -> float:
    """LMG action I(eps): loop integral of jz/J over the closed orbit.

    Handles both orbit topologies: rotation (the physical jz branch exists
    for all phi) and libration between phi turning points where the two
    branches merge.  Quadrature error is held below 1e-8 relative; the
    turning-point square roots are absorbed by a sine substitution.
    """
    if spec.model is not Model.LMG:
        raise ValueError("action is implemented for the LMG model")
    gx, gy = spec.gamma_x, spec.gamma_y
    if gx == 0.0 and gy == 0.0:
        return float(2.0 * np.pi * energy)
    stat = sorted((g + 1.0 / g) / 2.0 for g in (gx, gy) if g < -1)
    if len(stat) == 2:
        e_gs, e_esqpt = stat
        if not (e_gs < energy < e_esqpt):
            raise ValueError(
                f"energy {energy} outside the closed-orbit interval "
                f"({e_gs:.6g}, {e_esqpt:.6g})")

    # libration test: does the discriminant change sign over phi?
    phis = np.linspace(0.0, np.pi, 20001)
    disc = 1.0 - 2.0 * _g_phi(spec, phis) * energy + _g_phi(spec, phis) ** 2
    if np.all(disc > 0):
        # rotation: integrate the in-range branch over the full circle
        def jz_branch(phi):
            lo, hi, _ = _lmg_jz_branches(spec, energy, phi)
            return lo if abs(lo) <= 1.0 else hi

        val, err = quad(jz_branch, 0.0, 2.0 * np.pi, limit=400,
                        epsabs=1e-12, epsrel=1e-10)
        return float(abs(val))

    # libration: orbit confined between turning points where disc = 0
    sign_change = np.flatnonzero(np.diff(np.sign(disc)) != 0)
    if sign_change.size < 2:
        raise ValueError(f"could not locate turning points at energy {energy}")
    from scipy.optimize import brentq

    def disc_of(phi):
        g = _g_phi(spec, phi)
        return 1.0 - 2.0 * g * energy + g * g

    phi_a = brentq(disc_of, phis[sign_change[0]], phis[sign_change[0] + 1],
                   xtol=1e-14)
    phi_b = brentq(disc_of, phis[sign_change[-1]], phis[sign_change[-1] + 1],
                   xtol=1e-14)
    mid, half = 0.5 * (phi_a + phi_b), 0.5 * (phi_b - phi_a)

    def integrand(u):
        phi = mid + half * np.sin(u)
        g = _g_phi(spec, phi)
        d = max(1.0 - 2.0 * g * energy + g * g, 0.0)
        return 2.0 * np.sqrt(d) / abs(g) * half * np.cos(u)

    val, err = quad(integrand, -np.pi / 2, np.pi / 2, limit=400,
                    epsabs=1e-12, epsrel=1e-10)
    return float(abs(val))


def _dI_deps(spec: ModelSpec, energy: float, step: float = 1e-4) -> float:
    """Richardson-extrapolated central difference of I(eps)."""
    def central(h):
        return (action(spec, energy + h) - action(spec, energy - h)) / (2.0 * h)

    d1, d2 = central(step), central(step / 2.0)
    return (4.0 * d2 - d1) / 3.0


def _d2I_deps2(spec: ModelSpec, energy: float, step: float = 1e-3) -> float:
    def central(h):
        return (action(spec, energy + h) - 2.0 * action(spec, energy)
                + action(spec, energy - h)) / (h * h)

    d1, d2 = central(step), central(step / 2.0)
    return (4.0 * d2 - d1) / 3.0


def omega_classical(spec: ModelSpec, energy: float) -> float:
    """Classical frequency 2 pi / (dI/deps) of the orbit at eps."""
    return float(2.0 * np.pi / _dI_deps(spec, energy))


def e2_semiclassical(spec: ModelSpec, energy: float, j: float | None = None) -> float:
    """Anharmonicity -(w_cl^3 / 4 pi J) d2I/deps2 at eps."""
    j = spec.j if j is None else j
    w_cl = omega_classical(spec, energy)
    return float(-(w_cl**3) / (4.0 * np.pi * j) * _d2I_deps2(spec, energy))


def convergence_study(coherent_spec, spec_template: ModelSpec,
                      j_values: list[float]) -> list[dict]:
    """Quantum pipeline per J plus the semiclassical reference values.

    Emits one row per J: delta_E1, omega_max1 (= omega1 bracketing rule),
    omega1 from the quadratic fit, e2 (fit / second-difference /
    semiclassical), IPR, and t_D.
    """
    from .hamiltonians import build_lmg, diagonalize
    from .coherent import bloch_coefficients, parity_project, components
    from .survival import estimate_parameters, fit_quadratic_spectrum, \
        select_window, ipr as ipr_exact

    rows = []
    for j in j_values:
        spec = ModelSpec(model=Model.LMG, j=j, parity=spec_template.parity,
                         gamma_x=spec_template.gamma_x,
                         gamma_y=spec_template.gamma_y,
                         dimension_limit=spec_template.dimension_limit)
        h, basis = build_lmg(spec)
        es = diagonalize(h, basis)
        state = parity_project(
            bloch_coefficients(j, coherent_spec.jz0_over_j, coherent_spec.phi0),
            basis, j)
        dist = components(es, state)
        model = estimate_parameters(dist)
        idx, captured = select_window(dist)
        (e0, e1, e2_fit), resid = fit_quadratic_spectrum(dist.energies[idx])
        eps = dist.mean / j
        omega1_eq = float(np.sqrt(max(e1**2 + 4.0 * e2_fit * (dist.mean - e0), 0.0)))
        rows.append({
            "j": j,
            "mean_over_j": dist.mean / j,
            "sigma": model.sigma,
            "delta_e1": model.delta_e1,
            "omega_max1": model.omega1,
            "omega1_fit": omega1_eq,
            "e2_fit": e2_fit,
            "e2_bracket": model.e2,
            "e2_semiclassical": e2_semiclassical(spec, eps, j),
            "omega_cl": omega_classical(spec, eps),
            "ipr": ipr_exact(dist),
            "t_decay": model.t_decay,
            "window_capture": captured,
        })
    return rows
