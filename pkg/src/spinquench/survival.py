"""Survival probability: numerics, single-sequence fits, and the analytic model.

The numerical survival probability of a state with energy components
(E_k, |c_k|^2) is SP(t) = |sum_k |c_k|^2 exp(-i E_k t)|^2.  When the
weights are Gaussian in energy and the local spectrum is quasi-harmonic,
E_k = e0 + e1 k + e2 k^2, the whole evolution collapses onto a Jacobi
theta function of three parameters (sigma, omega1, e2):

    SP(t) = omega1 / (2 sqrt(pi) sigma) * Theta3(omega1 t / 2, y),
    y = exp(-omega1^2 / (4 sigma^2) - t^2 / t_D^2),   t_D = omega1 / (sigma |e2|).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coherent import ComponentDistribution

__all__ = [
    "TimeSeries", "SequenceModel", "GaussianGateError",
    "sp_numerical", "ipr", "ipr_gaussian", "long_time_statistics",
    "select_window", "fit_quadratic_spectrum", "estimate_parameters",
    "theta3", "theta3_dy", "sp_analytic", "sp_component", "decay_envelope",
    "powerlaw_constant", "linear_time_grid", "log_time_grid",
]

WINDOW_HALF_WIDTH_SIGMAS = 3.5
GATE_MIN_CAPTURE = 0.99
GATE_MAX_RESIDUAL_OVER_OMEGA1 = 0.05


class GaussianGateError(RuntimeError):
    """Analytic pipeline refused: the state violates its Gaussian assumptions."""


@dataclass(frozen=True)
class TimeSeries:
    """Sampled survival probability; ``under_resolved`` flags a coarse grid."""

    times: np.ndarray
    values: np.ndarray
    under_resolved: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SequenceModel:
    """Fitted single-sequence parameters of the analytic model.

    ``amplitude`` = A, ``mean`` = Ebar, ``sigma``, ``omega1``, ``e2``,
    ``delta_e1`` (mean consecutive gap) and the derived decay time
    t_D = omega1 / (sigma |e2|).
    """

    amplitude: float
    mean: float
    sigma: float
    omega1: float
    e2: float
    delta_e1: float
    e0: float = np.nan
    e1: float = np.nan

    @property
    def t_decay(self) -> float:
        if self.e2 == 0.0:
            return np.inf
        return self.omega1 / (self.sigma * abs(self.e2))

    @property
    def ipr_gaussian(self) -> float:
        return self.omega1 / (2.0 * np.sqrt(np.pi) * self.sigma)


def linear_time_grid(t_max: float, n_points: int = 4001) -> np.ndarray:
    return np.linspace(0.0, t_max, n_points)


def log_time_grid(t_min: float, t_max: float, n_points: int = 2000) -> np.ndarray:
    return np.geomspace(t_min, t_max, n_points)


def sp_numerical(dist: ComponentDistribution, times: np.ndarray) -> TimeSeries:
    """SP(t) = |sum_k w_k exp(-i E_k t)|^2 on a time grid.

    Summation over levels uses numpy's pairwise reduction.  A grid whose
    step does not resolve the spread of the 3.5-sigma window (twenty points
    per fastest period) is flagged, not rejected.
    """
    times = np.asarray(times, dtype=float)
    w = dist.weights / dist.total_weight
    e = dist.energies
    mu, sd = dist.mean, dist.std
    mask = np.abs(e - mu) <= WINDOW_HALF_WIDTH_SIGMAS * sd
    span = float(e[mask].max() - e[mask].min()) if mask.any() else 0.0
    dt = float(np.max(np.diff(times))) if times.size > 1 else 0.0
    under = span > 0 and dt > 2.0 * np.pi / (20.0 * span)
    if under:
        warnings.warn("time grid under-resolves the spectral window", RuntimeWarning)
    # drop numerically irrelevant weights to keep the evaluation affordable
    keep = w > 1e-16
    ek, wk = e[keep], w[keep]
    values = np.empty_like(times)
    chunk = max(1, 4_000_000 // max(ek.size, 1))
    for a in range(0, times.size, chunk):
        amp = np.exp(-1j * np.outer(times[a:a + chunk], ek)) @ wk
        values[a:a + chunk] = np.abs(amp) ** 2
    return TimeSeries(times=times, values=values, under_resolved=under)


def ipr(dist: ComponentDistribution) -> float:
    """Inverse participation ratio sum_k |c_k|^4 of a normalized distribution."""
    w = dist.weights / dist.total_weight
    return float(np.sum(w**2))


def ipr_gaussian(model: SequenceModel) -> float:
    """Gaussian estimate delta_E1 / (2 sqrt(pi) sigma), with delta_E1 ~ omega1."""
    return model.ipr_gaussian


def long_time_statistics(series: TimeSeries, window: tuple[float, float],
                         min_periods: float = 50.0,
                         fundamental_period: float | None = None) -> tuple[float, float]:
    """Time mean and std of SP over [t_a, t_b] past the decay time."""
    t_a, t_b = window
    if fundamental_period is not None and (t_b - t_a) < min_periods * fundamental_period:
        raise ValueError(
            f"window [{t_a}, {t_b}] spans fewer than {min_periods} fundamental periods")
    mask = (series.times >= t_a) & (series.times <= t_b)
    if mask.sum() < 2:
        raise ValueError("window contains fewer than 2 samples")
    vals = series.values[mask]
    return float(vals.mean()), float(vals.std())


def select_window(dist: ComponentDistribution,
                  n_sigmas: float = WINDOW_HALF_WIDTH_SIGMAS) -> tuple[np.ndarray, float]:
    """Indices with E_k within n_sigmas of the mean, plus the captured weight.

    A capture below 0.99 marks a non-Gaussian state; the analytic pipeline
    is gated on it downstream, a warning is raised here.
    """
    mu, sd = dist.mean, dist.std
    idx = np.flatnonzero(np.abs(dist.energies - mu) <= n_sigmas * sd)
    captured = float(dist.weights[idx].sum() / dist.total_weight)
    if captured < GATE_MIN_CAPTURE:
        warnings.warn(
            f"window captures {captured:.4f} < {GATE_MIN_CAPTURE}: "
            "non-Gaussian state", RuntimeWarning)
    return idx, captured


def fit_quadratic_spectrum(energies: np.ndarray) -> tuple[tuple[float, float, float], float]:
    """Least-squares fit E_k = e0 + e1 k + e2 k^2 over window indices.

    Returns ((e0, e1, e2), residual_rms).
    """
    energies = np.asarray(energies, dtype=float)
    if energies.size < 3:
        raise ValueError("quadratic fit needs at least 3 levels")
    if energies.size < 5:
        warnings.warn("fewer than 5 levels in the fit window", RuntimeWarning)
    k = np.arange(energies.size, dtype=float)
    coeffs = np.polynomial.polynomial.polyfit(k, energies, 2)
    resid = energies - np.polynomial.polynomial.polyval(k, coeffs)
    e0, e1, e2 = (float(c) for c in coeffs)
    return (e0, e1, e2), float(np.sqrt(np.mean(resid**2)))


def _bracket(energies: np.ndarray, target: float) -> int:
    """Index k with E_k <= target <= E_{k+1}."""
    if target < energies[0] or target > energies[-1]:
        raise ValueError(f"target energy {target} outside spectrum range")
    k = int(np.searchsorted(energies, target)) - 1
    return int(np.clip(k, 0, energies.size - 2))


def estimate_parameters(dist: ComponentDistribution,
                        enforce_gate: bool = True) -> SequenceModel:
    """Single-sequence model from a component distribution.

    omega1 is the consecutive gap bracketing the mean energy, e2 the
    discrete second difference there, delta_E1 the mean gap over the
    3.5-sigma window, and sigma comes from the distribution moments.
    The Gaussian gate (capture >= 0.99 and quadratic-fit residual RMS
    <= 0.05 omega1) guards against misuse on non-Gaussian states.
    """
    idx, captured = select_window(dist)
    if enforce_gate and captured < GATE_MIN_CAPTURE:
        raise GaussianGateError(
            f"window capture {captured:.4f} < {GATE_MIN_CAPTURE}")
    e_win = dist.energies[idx]
    (e0, e1, e2_fit), resid = fit_quadratic_spectrum(e_win)

    mu, sigma = dist.mean, dist.std
    kmax = _bracket(e_win, float(np.clip(mu, e_win[0], e_win[-1])))
    omega1 = float(e_win[kmax + 1] - e_win[kmax])
    if 0 < kmax:
        e2 = float((e_win[kmax + 1] + e_win[kmax - 1]) / 2.0 - e_win[kmax])
    else:
        e2 = e2_fit
    delta_e1 = float(np.mean(np.diff(e_win)))
    if enforce_gate:
        if resid > GATE_MAX_RESIDUAL_OVER_OMEGA1 * omega1:
            raise GaussianGateError(
                f"quadratic-fit residual RMS {resid:.3e} > "
                f"{GATE_MAX_RESIDUAL_OVER_OMEGA1} * omega1 = "
                f"{GATE_MAX_RESIDUAL_OVER_OMEGA1 * omega1:.3e}")
    amplitude = omega1 / (np.sqrt(2.0 * np.pi) * sigma)
    return SequenceModel(amplitude=amplitude, mean=mu, sigma=sigma,
                         omega1=omega1, e2=e2, delta_e1=delta_e1, e0=e0, e1=e1)


def theta3(x: float | np.ndarray, y: float | np.ndarray) -> np.ndarray:
    """Jacobi theta function Theta3(x, y) = 1 + 2 sum_{p>=1} y^(p^2) cos(2 p x).

    Truncated where y^(p^2) < 1e-16; requires 0 <= y < 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y >= 1):
        raise ValueError("theta3 requires 0 <= y < 1")
    ymax = float(y.max()) if y.size else 0.0
    if ymax == 0.0:
        return np.ones(np.broadcast(x, y).shape)
    p_max = int(np.ceil(np.sqrt(np.log(1e-16) / np.log(ymax))))
    p = np.arange(1, p_max + 1, dtype=float)
    xb, yb = np.broadcast_arrays(x, y)
    terms = (yb[..., None] ** (p**2)) * np.cos(2.0 * np.outer(xb.ravel(), p)
                                               .reshape(xb.shape + (p.size,)))
    return 1.0 + 2.0 * terms.sum(axis=-1)


def theta3_dy(y: float) -> float:
    """d Theta3(0, y)/dy = 2 sum_{p>=1} p^2 y^(p^2 - 1)."""
    if not 0 <= y < 1:
        raise ValueError("theta3_dy requires 0 <= y < 1")
    if y == 0.0:
        return 2.0
    p_max = int(np.ceil(np.sqrt(np.log(1e-16) / np.log(y)))) + 1
    p = np.arange(1, p_max + 1, dtype=float)
    return float(2.0 * np.sum(p**2 * y ** (p**2 - 1)))


def _theta_arguments(model: SequenceModel, times: np.ndarray):
    x = 0.5 * model.omega1 * times
    log_y = -model.omega1**2 / (4.0 * model.sigma**2)
    if np.isfinite(model.t_decay):
        log_y = log_y - (times / model.t_decay) ** 2
    y = np.exp(np.clip(log_y, -745.0, 0.0))
    y = np.minimum(y, 1.0 - 1e-16)
    return x, y


def sp_analytic(model: SequenceModel, times: np.ndarray) -> TimeSeries:
    """Theta-function survival probability of a single Gaussian sequence."""
    times = np.asarray(times, dtype=float)
    x, y = _theta_arguments(model, times)
    prefactor = model.omega1 / (2.0 * np.sqrt(np.pi) * model.sigma)
    return TimeSeries(times=times, values=prefactor * theta3(x, y))


def sp_component(model: SequenceModel, p: int, times: np.ndarray) -> np.ndarray:
    """The p-th oscillating component of the analytic survival probability."""
    times = np.asarray(times, dtype=float)
    decay = np.exp(-(p**2) * (model.omega1**2 / (4 * model.sigma**2)
                              + (times / model.t_decay) ** 2))
    return (model.omega1 / (model.sigma * np.sqrt(np.pi))) * decay \
        * np.cos(p * model.omega1 * times)


def decay_envelope(model: SequenceModel, times: np.ndarray) -> np.ndarray:
    """Analytic model with every cosine replaced by 1 (revival envelope)."""
    times = np.asarray(times, dtype=float)
    _, y = _theta_arguments(model, times)
    prefactor = model.omega1 / (2.0 * np.sqrt(np.pi) * model.sigma)
    return prefactor * theta3(0.0, y)


def powerlaw_constant(model: SequenceModel) -> tuple[float, float]:
    """Constant c of the late-revival power law SP_decay(t) ~ c / t.

    Returns (c, c_closed_form) where the closed form is
    0.499031 * omega1 * t_D / sigma.  e2 = 0 (harmonic spectrum) yields
    infinity: the revivals never decay.
    """
    if model.e2 == 0.0:
        return np.inf, np.inf
    c = (1.0 / (np.sqrt(np.pi) * np.e)) * theta3_dy(1.0 / np.e) \
        * model.omega1**2 / (model.sigma**2 * abs(model.e2))
    closed = 0.499031 * model.omega1 * model.t_decay / model.sigma
    return float(c), float(closed)
