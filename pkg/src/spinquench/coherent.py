"""Bloch and Glauber coherent states and their energy-basis decomposition.

A Bloch state is parametrized by (jz0/J, phi0) through

    z = sqrt((1 + jz0/J) / (1 - jz0/J)) * exp(-i phi0),

with <J,m|z> = binom(2J, J+m)^(1/2) z^(J+m) / (1+|z|^2)^J.  All binomial
and factorial math runs in log space, so J up to a few thousand is safe.
A Glauber state carries the usual Poissonian amplitudes exp(-|a|^2/2)
a^n / sqrt(n!), also log-stabilized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hamiltonians import EigenSystem, Model, ModelSpec, Parity, SectorBasis

__all__ = [
    "CoherentSpec", "ComponentDistribution", "ProjectionError", "CutoffError",
    "bloch_coefficients", "glauber_coefficients", "alpha_from_qp",
    "parity_project", "components", "analytic_moments",
    "coherent_overlap_level_curve", "bloch_overlap", "glauber_overlap",
    "dicke_product_state", "solve_q0_for_energy",
]


class ProjectionError(ValueError):
    """Raised when the requested parity sector carries negligible weight."""


class CutoffError(ValueError):
    """Raised when a Glauber state does not fit under the boson cutoff."""


@dataclass(frozen=True)
class CoherentSpec:
    """Initial coherent state: Bloch parameters, plus (q0, p0) for Dicke.

    ``q0``/``p0`` are the unscaled bosonic quadratures; alpha = (q+ip)/sqrt(2).
    """

    jz0_over_j: float
    phi0: float
    q0: float = 0.0
    p0: float = 0.0
    parity_projected: bool = True

    def __post_init__(self):
        if abs(self.jz0_over_j) > 1:
            raise ValueError(f"|jz0/J| must be <= 1, got {self.jz0_over_j}")


@dataclass(frozen=True)
class ComponentDistribution:
    """Weights |c_k|^2 of an initial state over eigenvalues E_k, sorted by E_k."""

    energies: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if e.shape != w.shape or e.ndim != 1:
            raise ValueError("energies and weights must be 1-d arrays of equal length")
        if np.any(w < -1e-15):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def mean(self) -> float:
        return float(self.energies @ self.weights / self.total_weight)

    @property
    def std(self) -> float:
        mu = self.mean
        var = float(((self.energies - mu) ** 2) @ self.weights / self.total_weight)
        return np.sqrt(max(var, 0.0))

    def to_csv(self, path) -> None:
        data = np.column_stack([self.energies, self.weights])
        np.savetxt(path, data, fmt="%.16e", delimiter=",",
                   header="E_k,weight", comments="")


def bloch_coefficients(j: float, jz0_over_j: float, phi0: float) -> np.ndarray:
    """Coefficient vector <J,m|z> over the full m = -J..J basis.

    Poles jz0/J = +/-1 map directly onto the basis kets |J, +/-J>.
    """
    two_j = round(2 * j)
    m = -j + np.arange(two_j + 1, dtype=float)
    coef = np.zeros(two_j + 1, dtype=complex)
    if jz0_over_j <= -1.0:
        coef[0] = 1.0
        return coef
    if jz0_over_j >= 1.0:
        coef[-1] = 1.0
        return coef
    log_abs_z = 0.5 * (np.log1p(jz0_over_j) - np.log1p(-jz0_over_j))
    # log(1+|z|^2) = -log(1 - jz0/J) + log 2 - log 2 ... direct stable form:
    log_one_plus_z2 = np.log(2.0) - np.log1p(-jz0_over_j)
    k = np.arange(two_j + 1, dtype=float)  # k = J + m
    log_binom = gammaln(two_j + 1) - gammaln(k + 1) - gammaln(two_j - k + 1)
    log_mag = 0.5 * log_binom + k * log_abs_z - j * log_one_plus_z2
    phase = -k * phi0
    coef = np.exp(log_mag) * np.exp(1j * phase)
    return coef


def glauber_coefficients(alpha: complex, nmax: int) -> np.ndarray:
    """Coefficient vector of |alpha> over n = 0..nmax, log-stabilized.

    Requires |alpha|^2 <= nmax/4 so the Poisson tail beyond the cutoff is
    negligible; the final tail is checked against 1e-10.
    """
    alpha = complex(alpha)
    a2 = abs(alpha) ** 2
    if a2 > nmax / 4.0 and a2 > 0:
        raise CutoffError(
            f"|alpha|^2 = {a2:.3g} exceeds nmax/4 = {nmax / 4:.3g}; raise the cutoff")
    n = np.arange(nmax + 1, dtype=float)
    if a2 == 0.0:
        coef = np.zeros(nmax + 1, dtype=complex)
        coef[0] = 1.0
        return coef
    log_mag = -0.5 * a2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    phase = n * np.angle(alpha)
    coef = np.exp(log_mag) * np.exp(1j * phase)
    tail = 1.0 - float(np.sum(np.abs(coef) ** 2))
    if tail > 1e-10:
        raise CutoffError(f"truncation tail {tail:.3e} exceeds 1e-10 at nmax={nmax}")
    return coef


def alpha_from_qp(q: float, p: float) -> complex:
    """alpha = (q + i p)/sqrt(2) for unscaled quadratures."""
    return (q + 1j * p) / np.sqrt(2.0)


def dicke_product_state(j: float, spec: CoherentSpec, nmax: int) -> np.ndarray:
    """Full-basis product-state coefficients over (n, m), n-major ordering."""
    bloch = bloch_coefficients(j, spec.jz0_over_j, spec.phi0)
    glauber = glauber_coefficients(alpha_from_qp(spec.q0, spec.p0), nmax)
    return np.kron(glauber, bloch)


def parity_project(coefficients: np.ndarray, basis: SectorBasis, j: float,
                   nmax: int | None = None) -> np.ndarray:
    """Restrict full-basis coefficients to one parity sector and renormalize.

    In these bases, sector restriction followed by renormalization is the
    (1 + Pi)/norm parity projection.  Raises ProjectionError when the sector
    weight falls below 1e-8.
    """
    coefficients = np.asarray(coefficients)
    two_j = round(2 * j)
    if basis.model is Model.LMG:
        # full basis ordered by m = -J .. J; sector keeps every other m
        offset = 0 if basis.parity is Parity.PLUS else 1
        idx = np.arange(offset, two_j + 1, 2)
    else:
        if nmax is None:
            nmax = coefficients.size // (two_j + 1) - 1
        want = 0 if basis.parity is Parity.PLUS else 1
        n = np.repeat(np.arange(nmax + 1), two_j + 1)
        k = np.tile(np.arange(two_j + 1), nmax + 1)
        idx = np.flatnonzero((n + k) % 2 == want)
    sector = coefficients[idx]
    norm2 = float(np.sum(np.abs(sector) ** 2))
    if norm2 < 1e-8:
        raise ProjectionError(
            f"sector weight {norm2:.3e} < 1e-8; state is nearly pure opposite parity")
    return sector / np.sqrt(norm2)


def components(eigensystem: EigenSystem, state: np.ndarray) -> ComponentDistribution:
    """Project a sector state onto the eigenbasis: entries (E_k, |c_k|^2)."""
    state = np.asarray(state)
    if state.shape[0] != eigensystem.eigenvectors.shape[0]:
        raise ValueError("state dimension does not match the eigensystem")
    c = eigensystem.eigenvectors.T @ state
    return ComponentDistribution(energies=eigensystem.eigenvalues.copy(),
                                 weights=np.abs(c) ** 2)


def _lmg_variance(spec: ModelSpec, theta: float, phi: float) -> float:
    """sigma^2 = Omega1 + Omega2 for the LMG state (cos(theta) = jz/J)."""
    gx, gy = spec.gamma_x, spec.gamma_y
    j = spec.j
    st, ct = np.sin(theta), np.cos(theta)
    cp, sp_ = np.cos(phi), np.sin(phi)
    omega1 = (j / 2.0) * (
        -2 * gx * ct * st**2 * cp**2
        - 2 * gy * ct * st**2 * sp_**2
        + gx**2 * (st**4 * cp**2 * sp_**2 + ct**2 * st**2 * cp**2)
        + gy**2 * (st**4 * cp**2 * sp_**2 + ct**2 * st**2 * sp_**2)
        + st**2
        - 2 * gx * gy * st**4 * cp**2 * sp_**2
    )
    omega2 = (1.0 / 8.0) * (1.0 - 1.0 / (2 * j)) * (
        -4 * gx * gy * ct**2
        + (gx * (1 - st**2 * cp**2) + gy * (1 - st**2 * sp_**2)) ** 2
    )
    return omega1 + omega2


def _dicke_variance(spec: ModelSpec, theta: float, phi: float,
                    qe: float, pe: float) -> float:
    """sigma^2 = Omega1 + Omega2 for the Dicke state in scaled quadratures."""
    w, w0, g = spec.omega, spec.omega0, spec.gamma
    j = spec.j
    st, ct = np.sin(theta), np.cos(theta)
    cp, sp_ = np.cos(phi), np.sin(phi)
    omega1 = j * (
        0.5 * w**2 * (qe**2 + pe**2)
        + 0.5 * w0**2 * st**2
        + 2 * g**2 * ((st**2 * sp_**2 + ct**2) * qe**2 + st**2 * cp**2)
        + 2 * g * qe * (w * cp - w0 * ct * cp) * st
    )
    omega2 = g**2 * (st**2 * sp_**2 + ct**2)
    return omega1 + omega2


def h_classical_expectation(model_spec: ModelSpec, state: CoherentSpec,
                            include_kappa: bool = True) -> float:
    """Exact <H> in the unprojected coherent state."""
    j = model_spec.j
    jz = state.jz0_over_j
    st2 = 1.0 - jz**2
    if model_spec.model is Model.LMG:
        g_of_phi = (model_spec.gamma_x * np.cos(state.phi0) ** 2
                    + model_spec.gamma_y * np.sin(state.phi0) ** 2)
        e = j * jz + (j / 2.0) * st2 * g_of_phi
        if include_kappa:
            e += j / (2 * (2 * j - 1)) * (model_spec.gamma_x + model_spec.gamma_y)
        return e
    qe, pe = state.q0 / np.sqrt(j), state.p0 / np.sqrt(j)
    return j * (0.5 * model_spec.omega * (qe**2 + pe**2)
                + model_spec.omega0 * jz
                + 2 * model_spec.gamma * np.sqrt(st2) * qe * np.cos(state.phi0))


def analytic_moments(model_spec: ModelSpec, state: CoherentSpec) -> tuple[float, float]:
    """Closed-form (mean, std) of H in the unprojected coherent state."""
    theta = np.arccos(np.clip(state.jz0_over_j, -1.0, 1.0))
    mean = h_classical_expectation(model_spec, state)
    if model_spec.model is Model.LMG:
        var = _lmg_variance(model_spec, theta, state.phi0)
    else:
        j = model_spec.j
        var = _dicke_variance(model_spec, theta, state.phi0,
                              state.q0 / np.sqrt(j), state.p0 / np.sqrt(j))
    return mean, float(np.sqrt(max(var, 0.0)))


def bloch_overlap(j: float, z1: complex, z2: complex) -> complex:
    """<z1|z2> for Bloch states (closed form)."""
    num = (1 + np.conj(z1) * z2) ** round(2 * j)
    den = ((1 + abs(z1) ** 2) * (1 + abs(z2) ** 2)) ** j
    return num / den


def glauber_overlap(a1: complex, a2: complex) -> complex:
    """<a1|a2> for Glauber states (closed form)."""
    return np.exp(-0.5 * abs(a1) ** 2 - 0.5 * abs(a2) ** 2 + np.conj(a1) * a2)


def z_from_state(jz_over_j: float, phi: float) -> complex:
    if jz_over_j >= 1.0:
        return np.inf
    return np.sqrt((1 + jz_over_j) / (1 - jz_over_j)) * np.exp(-1j * phi)


def coherent_overlap_level_curve(j: float, spec0: CoherentSpec,
                                 phi_grid: np.ndarray, jz_grid: np.ndarray,
                                 qe: float | None = None,
                                 pe: float | None = None) -> np.ndarray:
    """|<z,a|z0,a0>|^2 over a (phi, jz/J) grid at a fixed (q_e, p_e) slice.

    With ``qe``/``pe`` omitted, the bosonic factor is dropped (pure Bloch
    overlap), which is the LMG case.
    """
    z0 = z_from_state(spec0.jz0_over_j, spec0.phi0)
    out = np.empty((jz_grid.size, phi_grid.size))
    for a, jz in enumerate(jz_grid):
        for b, phi in enumerate(phi_grid):
            z = z_from_state(jz, phi)
            ov = bloch_overlap(j, z, z0)
            if qe is not None:
                a0 = alpha_from_qp(spec0.q0, spec0.p0)
                a1 = alpha_from_qp(qe * np.sqrt(j), (pe or 0.0) * np.sqrt(j))
                ov = ov * glauber_overlap(a1, a0)
            out[a, b] = abs(ov) ** 2
    return out


def solve_q0_for_energy(model_spec: ModelSpec, jz0_over_j: float, phi0: float,
                        p0: float, target_energy_over_j: float,
                        prefer_larger: bool = False) -> float:
    """Unscaled q0 with <H>/J equal to a target (Dicke scan protocol).

    The scaled classical Hamiltonian is quadratic in q_e; the smaller-|q|
    root is returned by default.
    """
    j = model_spec.j
    w, w0, g = model_spec.omega, model_spec.omega0, model_spec.gamma
    pe = p0 / np.sqrt(j)
    b = 2.0 * g * np.sqrt(max(1.0 - jz0_over_j**2, 0.0)) * np.cos(phi0)
    # (w/2) qe^2 + b qe + (w/2) pe^2 + w0 jz - eps = 0
    c = 0.5 * w * pe**2 + w0 * jz0_over_j - target_energy_over_j
    disc = b * b - 2.0 * w * c
    if disc < 0:
        raise ValueError(
            f"target energy {target_energy_over_j} unreachable at jz/J={jz0_over_j}")
    roots = np.array([(-b + np.sqrt(disc)) / w, (-b - np.sqrt(disc)) / w])
    roots = roots[np.argsort(np.abs(roots))]
    qe = roots[-1] if prefer_larger else roots[0]
    return float(qe * np.sqrt(j))
