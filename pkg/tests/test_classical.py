"""Tests for the scaled classical dynamics, actions, and Poincare sections."""

from __future__ import annotations

import numpy as np
import pytest

from spinquench.classical import (
    ClassicalState,
    PoleError,
    action,
    convergence_study,
    e2_semiclassical,
    gradient,
    h_classical,
    integrate,
    omega_classical,
    poincare,
    poincare_seeds,
)
from spinquench.coherent import CoherentSpec
from spinquench.hamiltonians import Model, ModelSpec

LMG_CLASSICAL = ModelSpec(model=Model.LMG, j=100, gamma_x=-3.0, gamma_y=-5.0)
DICKE_CLASSICAL = ModelSpec(model=Model.DICKE, j=8, omega=1.0, omega0=1.0,
                            gamma=1.0, nmax=80)
PAPER_EPS = -2.376
PAPER_OMEGA_CL = 2.818


def _fd_gradient(state: ClassicalState, spec: ModelSpec, h: float = 1e-6):
    y0 = state.as_array(spec.model)
    out = np.empty_like(y0)
    for k in range(y0.size):
        yp, ym = y0.copy(), y0.copy()
        yp[k] += h
        ym[k] -= h
        out[k] = (h_classical(ClassicalState(*yp), spec)
                  - h_classical(ClassicalState(*ym), spec)) / (2.0 * h)
    return out


class TestGradient:
    @pytest.mark.parametrize("spec", [LMG_CLASSICAL, DICKE_CLASSICAL],
                             ids=["lmg", "dicke"])
    def test_matches_finite_differences(self, spec):
        rng = np.random.default_rng(3)
        for _ in range(100):
            state = ClassicalState(phi=rng.uniform(-np.pi, np.pi),
                                   jz=rng.uniform(-0.9, 0.9),
                                   qe=rng.uniform(-2, 2),
                                   pe=rng.uniform(-2, 2))
            exact = gradient(state, spec)
            approx = _fd_gradient(state, spec)
            assert np.max(np.abs(exact - approx)) < 1e-6

    def test_pole_raises(self):
        with pytest.raises(PoleError):
            gradient(ClassicalState(phi=0.1, jz=1.0, qe=0.5), DICKE_CLASSICAL)

    def test_invalid_jz_rejected(self):
        with pytest.raises(ValueError):
            ClassicalState(phi=0.0, jz=1.5)


class TestIntegration:
    def test_free_precession(self):
        # zero coupling: jz conserved, phi advances uniformly at rate 1 - 0
        spec = ModelSpec(model=Model.LMG, j=10, gamma_x=0.0, gamma_y=0.0)
        times = np.linspace(0.0, 30.0, 301)
        sol = integrate(ClassicalState(phi=0.3, jz=-0.4), spec, 30.0,
                        t_eval=times)
        assert np.max(np.abs(sol.y[1] - (-0.4))) < 1e-10
        assert np.max(np.abs(sol.y[0] - (0.3 + times))) < 1e-9

    def test_energy_conserved_on_long_lmg_run(self):
        state = ClassicalState(phi=np.pi / 2, jz=-0.5)
        e0 = h_classical(state, LMG_CLASSICAL)
        sol = integrate(state, LMG_CLASSICAL, 500.0)
        ef = h_classical(ClassicalState(*sol.y[:, -1]), LMG_CLASSICAL)
        assert abs(ef - e0) < 1e-9 * abs(e0)

    def test_trajectory_period_matches_action_frequency(self):
        state = ClassicalState(phi=np.pi / 2, jz=-0.5)
        eps = h_classical(state, LMG_CLASSICAL)
        w_cl = omega_classical(LMG_CLASSICAL, eps)
        period = 2.0 * np.pi / w_cl
        times = np.linspace(0.0, 3.0 * period, 6001)
        sol = integrate(state, LMG_CLASSICAL, times[-1], t_eval=times)
        y0 = sol.y[:, 0]
        dist = np.hypot(np.mod(sol.y[0] - y0[0] + np.pi, 2 * np.pi) - np.pi,
                        sol.y[1] - y0[1])
        # first return to the initial point after leaving it
        away = np.flatnonzero(dist > 0.1)[0]
        back = away + np.argmin(dist[away:away + 3000])
        assert times[back] == pytest.approx(period, rel=1e-3)

    def test_pole_guard_on_initial_state(self):
        with pytest.raises(PoleError):
            integrate(ClassicalState(phi=0.0, jz=1.0 - 1e-12), DICKE_CLASSICAL,
                      10.0)

    def test_j_independent(self):
        state = ClassicalState(phi=0.7, jz=0.2, qe=0.5, pe=-0.3)
        for j in (4, 400):
            spec = ModelSpec(model=Model.DICKE, j=j, omega=1.0, omega0=1.0,
                             gamma=1.0, nmax=40)
            assert h_classical(state, spec) == h_classical(state, DICKE_CLASSICAL)


class TestAction:
    def test_zero_coupling_is_harmonic(self):
        spec = ModelSpec(model=Model.LMG, j=10, gamma_x=0.0, gamma_y=0.0)
        for eps in (-0.7, -0.2, 0.4):
            assert action(spec, eps) == pytest.approx(2.0 * np.pi * eps,
                                                      abs=1e-10)

    def test_frequency_at_reference_energy(self):
        w_cl = omega_classical(LMG_CLASSICAL, PAPER_EPS)
        assert w_cl == pytest.approx(PAPER_OMEGA_CL, rel=2e-3)

    def test_richardson_step_insensitivity(self):
        w_a = omega_classical(LMG_CLASSICAL, PAPER_EPS)
        # same derivative from a standalone coarse/fine pair of steps
        for h in (2e-4, 5e-5):
            d = (action(LMG_CLASSICAL, PAPER_EPS + h)
                 - action(LMG_CLASSICAL, PAPER_EPS - h)) / (2.0 * h)
            assert 2.0 * np.pi / d == pytest.approx(w_a, rel=1e-6)

    def test_anharmonicity_scales_as_inverse_j(self):
        e2_1000 = e2_semiclassical(LMG_CLASSICAL, PAPER_EPS, j=1000)
        e2_2000 = e2_semiclassical(LMG_CLASSICAL, PAPER_EPS, j=2000)
        assert e2_1000 == pytest.approx(2.0 * e2_2000, rel=1e-12)

    def test_anharmonicity_reference_value(self):
        e2 = e2_semiclassical(LMG_CLASSICAL, PAPER_EPS, j=2000)
        assert e2 == pytest.approx(-9.38e-4, rel=0.03)

    def test_energy_outside_well_rejected(self):
        with pytest.raises(ValueError):
            action(LMG_CLASSICAL, -3.0)   # below the ground-state energy
        with pytest.raises(ValueError):
            action(LMG_CLASSICAL, -1.0)   # above the separatrix energy

    def test_dicke_action_unsupported(self):
        with pytest.raises(ValueError):
            action(DICKE_CLASSICAL, -1.8)


class TestPoincare:
    def test_seeds_lie_on_shell(self):
        phis = np.linspace(-2.0, 2.0, 5)
        jzs = np.linspace(-0.6, 0.3, 5)
        seeds, rejected = poincare_seeds(DICKE_CLASSICAL, -1.8, phis, jzs)
        assert seeds
        for s in seeds:
            assert h_classical(s, DICKE_CLASSICAL) == pytest.approx(-1.8,
                                                                    abs=1e-12)
        assert len(seeds) + len(rejected) == phis.size * jzs.size

    def test_section_energy_drift_and_points(self):
        seeds, _ = poincare_seeds(DICKE_CLASSICAL, -1.8,
                                  np.array([0.0, 0.2]), np.array([-0.5, 0.0]))
        section = poincare(DICKE_CLASSICAL, -1.8, seeds, crossings=20)
        assert section.points.shape[0] > 0
        assert section.energy_drift < 1e-8
        assert np.all(np.abs(section.points[:, 1]) <= np.pi)
        assert np.all(np.abs(section.points[:, 2]) <= 1.0)

    def test_weak_coupling_section_is_integrable(self):
        # gamma -> 0 off resonance: jz is conserved (no secular exchange),
        # so every section point shares the seed's jz value to high accuracy
        spec = ModelSpec(model=Model.DICKE, j=8, omega=1.0, omega0=2.0,
                         gamma=0.01, nmax=80)
        jz0 = -0.4
        seeds, _ = poincare_seeds(spec, -0.2, np.array([0.3]), np.array([jz0]))
        section = poincare(spec, -0.2, seeds, crossings=30)
        assert section.points.shape[0] >= 10
        jz_pts = section.points[:, 2]
        assert np.ptp(jz_pts) < 1e-3                  # closed invariant curve
        assert np.max(np.abs(jz_pts - jz0)) < 0.05    # O(gamma) dressing only

    def test_lmg_section_rejected(self):
        with pytest.raises(ValueError):
            poincare(LMG_CLASSICAL, -2.0, [])


class TestConvergenceStudy:
    def test_quantum_values_approach_semiclassical(self):
        coherent = CoherentSpec(jz0_over_j=-np.cos(np.pi / 3), phi0=np.pi / 2)
        rows = convergence_study(coherent, LMG_CLASSICAL, [100, 200])
        assert [r["j"] for r in rows] == [100, 200]
        for r in rows:
            assert r["omega1_fit"] == pytest.approx(r["omega_cl"], rel=0.05)
            assert r["e2_fit"] == pytest.approx(r["e2_semiclassical"], rel=0.15)
            assert r["window_capture"] > 0.99
        # fit error against the semiclassical frequency shrinks with J
        err = [abs(r["omega1_fit"] - r["omega_cl"]) for r in rows]
        assert err[1] < err[0]
