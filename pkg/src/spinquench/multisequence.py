"""Gaussian sub-sequence detection, per-sequence fits, and interference terms.

In the regular regime of the Dicke model the eigencomponents of a coherent
state split into interleaved quasi-harmonic chains, each carrying a
Gaussian slice of the weight.  Each chain gets its own single-sequence
model; pairs of chains contribute an interference term whose canonical
(constant-shift) form is

    SP_I(t) = pref * sum_p W_p exp(-(sigma_ij p t)^2 / 2)
                            cos[(dE_ij + p w_ij) t],

with Gaussian pair weights W_p and a shift dE_ij estimated by
nearest-member pairing between the two chains.

Evaluation is done one level lower, through each chain's complex survival
amplitude S_i(t): with Gaussian weights and a locally quadratic spectrum,
Poisson summation turns S_i(t) into a closed-form sum of complex Gaussian
integrals.  The per-sequence survival probability is |S_i(t)|^2 (whose
constant-gap limit is the usual theta-function form) and the pair term is
2 Re[S_i(t) S_j(t)*], which needs no constant-shift assumption between the
chains and therefore stays accurate when the two local gaps differ, as
they do at small J.  The reported pair parameters (delta_e, omega_ij,
sigma_ij, E^(I)) are still those of the canonical form above.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .coherent import ComponentDistribution
from .survival import (GaussianGateError, SequenceModel, TimeSeries,
                       estimate_parameters, ipr, _bracket)

__all__ = [
    "SubSequence", "InterferencePair", "DetectionError", "SeparatrixReport",
    "detect_subsequences", "fit_sequence", "pair_parameters",
    "sp_interference", "sp_multi", "separatrix_report",
]


class DetectionError(RuntimeError):
    """No quasi-harmonic chain of the minimum length could be extracted."""


@dataclass
class SubSequence:
    """One detected chain: member indices into the parent distribution."""

    indices: np.ndarray
    energies: np.ndarray
    weights: np.ndarray
    model: SequenceModel | None = None

    @property
    def captured_weight(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class InterferencePair:
    """Pairwise interference parameters between sub-sequences i and j."""

    i: int
    j: int
    model_i: SequenceModel
    model_j: SequenceModel
    delta_e: float       # mean signed shift E^(i) - E^(j) of aligned members
    omega: float         # omega_ij, local gap of sequence i at E^(I)
    sigma: float         # sigma_ij
    e_cross: float       # E^(I)_ij, maximizer of the Gaussian product
    seq_i: "SubSequence" = field(default=None, repr=False, compare=False)
    seq_j: "SubSequence" = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SeparatrixReport:
    """Diagnostics for states outside the analytic model's domain."""

    analytic_model_applies: bool
    detection_failed: bool
    gate_failed: bool
    dominant_weight_fraction: float
    ipr: float
    decay_time_proxy: float
    n_sequences: int


def detect_subsequences(dist: ComponentDistribution,
                        weight_floor: float = 1e-5,
                        gap_tolerance: float = 0.25,
                        comparable_weight_factor: float = 10.0,
                        residual_weight_stop: float = 0.01,
                        min_members: int = 5,
                        min_sequence_weight: float = 0.01,
                        manual_assignment: list[np.ndarray] | None = None
                        ) -> list[SubSequence]:
    """Greedy chain extraction of quasi-harmonic Gaussian sub-sequences.

    Components above ``weight_floor`` (relative to the maximum) are
    considered.  Each chain is seeded at the largest unassigned component;
    its initial gap is the distance to the nearest unassigned component of
    comparable weight.  The chain then grows in both directions: the
    candidate nearest to the quadratic extrapolation of the last three
    members is accepted while it lies within ``gap_tolerance`` times the
    current local gap, which updates after every accept.  Seeding repeats
    until the unassigned weight drops below ``residual_weight_stop``.
    Deterministic; ``manual_assignment`` (lists of component indices)
    bypasses detection entirely.
    """
    energies, weights = dist.energies, dist.weights
    if manual_assignment is not None:
        return [
            SubSequence(indices=np.asarray(idx, dtype=int),
                        energies=energies[idx], weights=weights[idx])
            for idx in manual_assignment
        ]

    considered = np.flatnonzero(weights > weight_floor * weights.max())
    unassigned = set(considered.tolist())
    total = float(weights[considered].sum())
    chains: list[np.ndarray] = []

    def extrapolate(members: list[int], direction: int, gap: float) -> float:
        """Predicted next energy from the last three members on one side."""
        ordered = members if direction > 0 else members[::-1]
        tail = ordered[-3:]
        es = energies[tail]
        if len(tail) >= 3:
            # quadratic through the last three equally indexed points
            return float(3 * es[2] - 3 * es[1] + es[0])
        if len(tail) == 2:
            return float(2 * es[1] - es[0])
        return float(es[-1] + direction * gap)

    def grow(seed: int, gap0: float) -> list[int]:
        """Grow one chain bidirectionally from a seed with an initial gap."""
        gap = gap0
        members = [seed]
        grew = True
        while grew:
            grew = False
            for direction in (+1, -1):
                tip = members[-1] if direction > 0 else members[0]
                target = extrapolate(members, direction, gap)
                cands = np.array([i for i in unassigned if i not in members])
                if cands.size == 0:
                    continue
                side = cands[np.sign(energies[cands] - energies[tip]) == direction]
                if side.size == 0:
                    continue
                best = int(side[np.argmin(np.abs(energies[side] - target))])
                if abs(energies[best] - target) <= gap_tolerance * gap:
                    if direction > 0:
                        members.append(best)
                        gap = float(abs(energies[best] - energies[tip]))
                    else:
                        members.insert(0, best)
                        gap = float(abs(energies[tip] - energies[best]))
                    grew = True
        return members

    def best_chain_from(seed: int) -> list[int]:
        """Best trial chain for one seed across its candidate initial gaps.

        Candidate gaps are the distances to the nearest few unassigned
        components of comparable weight (the nearest one can belong to a
        different interleaved chain).  Among the grown-and-trimmed trials
        the heaviest chain with a smooth gap sequence wins (a quadratic
        chain has a nearly constant gap increment; chains that hop between
        interleaved families zigzag), falling back to raw weight.
        """
        pool = np.array(sorted(unassigned))
        mates = pool[(pool != seed)
                     & (weights[pool] >= weights[seed] / comparable_weight_factor)]
        if mates.size == 0:
            return []
        gaps = np.unique(np.sort(np.abs(energies[mates] - energies[seed]))[:8])
        trials = []
        for gap0 in gaps:
            trial = _trim_uneven(grow(seed, float(gap0)), energies)
            if seed in trial:
                trials.append(trial)
        smooth = [tr for tr in trials if _gap_roughness(tr, energies) <= 0.05]
        return max(smooth if smooth else trials,
                   key=lambda tr: weights[tr].sum(), default=[])

    dead: set[int] = set()
    while unassigned - dead:
        residual = float(weights[list(unassigned)].sum())
        if chains and residual < residual_weight_stop * total:
            break
        # tournament seeding: the heaviest few unassigned components each
        # propose their best chain and the heaviest chain overall is
        # accepted, so a small orphan level cannot steal every other member
        # of a denser family by seeding first
        pool = np.array(sorted(unassigned - dead))
        seeds = pool[np.argsort(weights[pool])[::-1][:5]]
        members: list[int] = []
        best_seed = int(seeds[0])
        for seed in seeds:
            trial = best_chain_from(int(seed))
            if weights[trial].sum() > (weights[members].sum() if members else 0.0):
                members, best_seed = trial, int(seed)
        if len(members) >= min_members:
            chain = np.array(sorted(members, key=lambda i: energies[i]))
            chains.append(chain)
            unassigned.difference_update(members)
        else:
            dead.add(best_seed)
            if not members:
                dead.update(int(s) for s in seeds)

    chains = [c for c in chains if weights[c].sum() >= min_sequence_weight * total]
    if not chains or all(c.size < min_members for c in chains):
        raise DetectionError(
            f"no quasi-harmonic chain of >= {min_members} members found")
    chains.sort(key=lambda c: -weights[c].sum())
    return [SubSequence(indices=c, energies=energies[c], weights=weights[c])
            for c in chains]


def _gap_roughness(members: list[int], energies: np.ndarray) -> float:
    """Median second difference of the gap sequence, per median gap.

    Near zero for a locally quadratic chain regardless of its curvature
    (and robust to a single irregular member); large for chains that
    alternate between interleaved families.
    """
    if len(members) < 4:
        return 0.0
    gaps = np.diff(energies[sorted(members, key=lambda i: energies[i])])
    return float(np.median(np.abs(np.diff(gaps, 2))) / np.median(gaps)) \
        if gaps.size >= 3 else 0.0


def _trim_uneven(members: list[int], energies: np.ndarray,
                 spread: float = 0.35) -> list[int]:
    """Trim chain ends until every gap is within +-spread of the median gap.

    A quasi-harmonic chain has slowly varying gaps; trailing members picked
    up from other interleaved families show up as gap outliers at the ends.
    Chains that stay uneven in the interior are cut at the worst gap and the
    longer half is kept.
    """
    members = sorted(members, key=lambda i: energies[i])
    while len(members) >= 3:
        gaps = np.diff(energies[members])
        med = float(np.median(gaps))
        bad = np.abs(gaps - med) > spread * med
        if not bad.any():
            break
        if bad[-1]:
            members = members[:-1]
        elif bad[0]:
            members = members[1:]
        else:
            worst = int(np.argmax(np.abs(gaps - med)))
            left, right = members[:worst + 1], members[worst + 1:]
            members = left if len(left) >= len(right) else right
    return members


def _gaussian(e, a, mu, sd):
    return a * np.exp(-((e - mu) ** 2) / (2.0 * sd**2))


def fit_sequence(seq: SubSequence, interp_omega1: bool = False) -> SequenceModel:
    """Nonlinear least-squares Gaussian fit of one sub-sequence.

    (A_i, Ebar_i, sigma_i) come from the fit, initialized at the weighted
    moments; omega1 and e2 from the bracketing rule around Ebar_i within
    the sequence's own energies.  With ``interp_omega1`` the fundamental
    frequency is instead the local gap linearly interpolated at Ebar_i,
    which tracks the revival period better when the gap varies appreciably
    across the sequence (small J).
    """
    if seq.indices.size < 5:
        raise ValueError("fit_sequence needs at least 5 members")
    e, w = seq.energies, seq.weights
    mu0 = float(e @ w / w.sum())
    sd0 = float(np.sqrt(max(((e - mu0) ** 2) @ w / w.sum(), 1e-30)))
    a0 = float(w.max())
    span = float(e[-1] - e[0]) if e.size > 1 else max(abs(e[0]), 1.0)
    bounds = ([0.0, e[0] - span, 1e-12 * max(span, 1.0)],
              [np.inf, e[-1] + span, 10.0 * max(span, sd0)])
    try:
        popt, _ = curve_fit(_gaussian, e, w, p0=(a0, mu0, sd0),
                            bounds=bounds, maxfev=20000)
    except RuntimeError as exc:
        resid = w - _gaussian(e, a0, mu0, sd0)
        raise RuntimeError(
            f"Gaussian fit did not converge (moment-residual RMS "
            f"{np.sqrt(np.mean(resid**2)):.3e}): {exc}")
    amp, mean, sigma = float(popt[0]), float(popt[1]), float(abs(popt[2]))
    kmax = _bracket(e, min(max(mean, e[0]), e[-1]))
    omega1 = float(e[kmax + 1] - e[kmax])
    if interp_omega1:
        mids = 0.5 * (e[1:] + e[:-1])
        omega1 = float(np.interp(mean, mids, np.diff(e)))
        if kmax > 0:
            e2_loc = float((e[kmax + 1] + e[kmax - 1]) / 2.0 - e[kmax])
        else:
            e2_loc = float((e[kmax + 2] + e[kmax]) / 2.0 - e[kmax + 1])
        # the revival frequency is the gap at the weight-center index,
        # whose energy sits e2*(sigma/omega)^2 below the mean energy
        center = mean - e2_loc * (sigma / omega1) ** 2
        omega1 = float(np.interp(center, mids, np.diff(e)))
    if kmax > 0:
        e2 = float((e[kmax + 1] + e[kmax - 1]) / 2.0 - e[kmax])
    else:
        e2 = float((e[kmax + 2] + e[kmax]) / 2.0 - e[kmax + 1])
    delta_e1 = float(np.mean(np.diff(e)))
    model = SequenceModel(amplitude=amp, mean=mean, sigma=sigma,
                          omega1=omega1, e2=e2, delta_e1=delta_e1)
    seq.model = model
    return model


def pair_parameters(seq_i: SubSequence, seq_j: SubSequence,
                    index_i: int = 0, index_j: int = 1,
                    interp_omega: bool = False) -> InterferencePair:
    """Interference parameters for an ordered pair of fitted sub-sequences.

    Members of j are aligned with their nearest members in i; delta_e is the
    mean signed difference E^(i) - E^(j) over those pairs.  The cross energy
    E^(I) maximizes the product of the two Gaussians, and omega_ij is the
    local gap of sequence i bracketing it.  With ``interp_omega`` the gap is
    instead interpolated at the index cross-center (the peak of the pair
    weight in index space), which sits e2*(sigma_k)^2 below each Gaussian's
    mean; this removes an O(e2 t) phase drift of the fast interference
    lines read off the reported parameters.
    """
    mi = seq_i.model if seq_i.model is not None else fit_sequence(seq_i)
    mj = seq_j.model if seq_j.model is not None else fit_sequence(seq_j)
    ei, ej = seq_i.energies, seq_j.energies
    near_idx = np.argmin(np.abs(ei[None, :] - ej[:, None]), axis=1)
    diffs = ei[near_idx] - ej
    # weight each aligned pair by its weight product and reject pairs that
    # are farther apart than half a gap (tail members with no true partner)
    u = seq_j.weights * seq_i.weights[near_idx]
    ok = np.abs(diffs) <= 0.6 * mi.omega1
    if ok.sum() >= 2 and u[ok].sum() > 0:
        diffs_ok, u_ok = diffs[ok], u[ok]
    else:
        diffs_ok, u_ok = diffs, u
    delta_e = float(diffs_ok @ u_ok / u_ok.sum())
    s2 = mi.sigma**2 + mj.sigma**2
    e_cross = (mi.mean * mj.sigma**2 + mj.mean * mi.sigma**2) / s2
    if not (ei[0] <= e_cross <= ei[-1]):
        raise ValueError(
            f"cross energy {e_cross:.6g} outside sequence-i span "
            f"[{ei[0]:.6g}, {ei[-1]:.6g}]")
    k = _bracket(ei, e_cross)
    omega = float(ei[k + 1] - ei[k])
    if interp_omega:
        mids = 0.5 * (ei[1:] + ei[:-1])
        gaps = np.diff(ei)
        ski2 = (mi.sigma / omega) ** 2
        skj2 = (mj.sigma / omega) ** 2
        center = ((mi.mean - mi.e2 * ski2) * mj.sigma**2
                  + (mj.mean + delta_e - mi.e2 * skj2) * mi.sigma**2) / s2
        omega = float(np.interp(center, mids, gaps))
    sigma = 2.0 * abs(mi.e2) * mi.sigma * mj.sigma / (omega * np.sqrt(s2))
    return InterferencePair(i=index_i, j=index_j, model_i=mi, model_j=mj,
                            delta_e=delta_e, omega=omega, sigma=sigma,
                            e_cross=float(e_cross), seq_i=seq_i, seq_j=seq_j)


def _chain_amplitude(seq: SubSequence, times: np.ndarray) -> np.ndarray:
    """Closed-form complex survival amplitude of one quasi-harmonic chain.

    The chain's spectrum is modelled as a weighted quadratic in the integer
    member index k, E(k) = a + b k + c k^2, and its weights as a Gaussian
    in energy with moment-matched mean, width and norm, plus a first
    skewness (third-cumulant) correction.  Poisson summation over k turns
    the amplitude into a sum over resonance branches p of complex Gaussian
    integrals, each available in closed form; no constant-gap or
    constant-shift assumption enters, so the same expression serves both
    |S|^2 and cross terms between chains with different local gaps.
    """
    times = np.asarray(times, dtype=float)
    e, w = seq.energies, seq.weights
    k = np.arange(e.size, dtype=float)
    k -= int(round(float(w @ k / w.sum())))
    a, b, c = np.polynomial.polynomial.polyfit(k, e, 2, w=np.sqrt(w))
    norm = float(w.sum())
    mean = float(w @ e / norm)
    sigma = float(np.sqrt(max((w @ (e - mean) ** 2) / norm, 1e-30)))
    amp = norm * b / (np.sqrt(2.0 * np.pi) * sigma)
    skew = float((w @ (e - mean) ** 3) / norm / sigma**3)
    skew = float(np.clip(skew, -1.5, 1.5))
    # weight factor 1 + (skew/6) He3(u), u = (b k - d) / sigma, expanded
    # into a cubic in k so every term reduces to derivatives of the base
    # Gaussian integral
    d = mean - a
    pk, qk = b / sigma, -d / sigma
    f0 = 1.0 + (skew / 6.0) * (qk**3 - 3.0 * qk)
    f1 = (skew / 6.0) * (3.0 * pk * qk**2 - 3.0 * pk)
    f2 = (skew / 6.0) * (3.0 * pk**2 * qk)
    f3 = (skew / 6.0) * pk**3
    alpha = b**2 / (2.0 * sigma**2) + 1j * c * times
    p_max = int(np.ceil(abs(b) * float(np.max(np.abs(times), initial=0.0))
                        / (2.0 * np.pi))) \
        + int(np.ceil(6.0 * sigma / abs(b))) + 2
    out = np.zeros_like(times, dtype=complex)
    for p in range(-p_max, p_max + 1):
        beta = b * d / sigma**2 + 1j * (2.0 * np.pi * p - b * times)
        expo = beta**2 / (4.0 * alpha) - d**2 / (2.0 * sigma**2) - 1j * a * times
        re = np.real(expo)
        if re.max() < -40.0:
            continue
        base = np.sqrt(np.pi / alpha) * np.exp(
            np.clip(re, -700.0, None) + 1j * np.imag(expo))
        r = beta / (2.0 * alpha)
        poly = f0 + f1 * r + f2 * (r**2 + 0.5 / alpha) \
            + f3 * (r**3 + 1.5 * r / alpha)
        out += poly * base
    return amp * out


def sp_interference(pair: InterferencePair, times: np.ndarray) -> TimeSeries:
    """Interference contribution 2 Re[S_i S_j*] of one pair of sub-sequences."""
    times = np.asarray(times, dtype=float)
    if pair.model_i.amplitude == 0.0 or pair.model_j.amplitude == 0.0:
        return TimeSeries(times=times, values=np.zeros_like(times))
    si = _chain_amplitude(pair.seq_i, times)
    sj = _chain_amplitude(pair.seq_j, times)
    return TimeSeries(times=times, values=2.0 * np.real(si * np.conj(sj)))


def sp_multi(sequences: list[SubSequence], pairs: list[InterferencePair],
             times: np.ndarray) -> tuple[TimeSeries, np.ndarray]:
    """Full multi-sequence analytic survival probability and its envelope.

    The total is sum_i |S_i|^2 + sum_pairs 2 Re[S_i S_j*] over the chain
    amplitudes.  The envelope zeroes the fast cosine arguments p*omega1 and
    p*omega_ij of the canonical per-sequence and pair forms, leaving the
    slow modulation.
    """
    times = np.asarray(times, dtype=float)
    total = np.zeros_like(times)
    envelope = np.zeros_like(times)
    amps: dict[int, np.ndarray] = {}

    def amplitude_of(seq: SubSequence) -> np.ndarray:
        key = id(seq)
        if key not in amps:
            amps[key] = _chain_amplitude(seq, times)
        return amps[key]

    for seq in sequences:
        m = seq.model if seq.model is not None else fit_sequence(seq)
        total += np.abs(amplitude_of(seq)) ** 2
        # envelope from the canonical theta form with cos(p omega1 t) -> 1
        pref = m.amplitude**2 * m.sigma * np.sqrt(np.pi) / m.omega1
        log_base = -m.omega1**2 / (4.0 * m.sigma**2) - np.zeros_like(times)
        if np.isfinite(m.t_decay):
            log_base = log_base - (times / m.t_decay) ** 2
        base = np.exp(np.clip(log_base, -745.0, 0.0))
        y0 = float(base.max())
        p_max = 1 if y0 <= 0 else int(np.ceil(np.sqrt(
            np.log(1e-16) / np.log(min(y0, 1 - 1e-16)))))
        comp_env = np.ones_like(times)
        for p in range(1, p_max + 1):
            comp_env += 2.0 * base ** (p**2)
        envelope += pref * comp_env
    for pair in pairs:
        si = amplitude_of(pair.seq_i) if pair.seq_i is not None else None
        if si is not None and pair.seq_j is not None:
            total += 2.0 * np.real(si * np.conj(amplitude_of(pair.seq_j)))
        else:
            total += sp_interference(pair, times).values
        envelope += _interference_envelope(pair, times)
    return TimeSeries(times=times, values=total), envelope


def _interference_envelope(pair: InterferencePair, times: np.ndarray) -> np.ndarray:
    """Canonical pair term with the fast p*omega_ij cosine zeroed."""
    mi, mj = pair.model_i, pair.model_j
    s2 = mi.sigma**2 + mj.sigma**2
    pref = 2.0 * mi.amplitude * mj.amplitude * np.sqrt(2.0 * np.pi) \
        * mi.sigma * mj.sigma / (pair.omega * np.sqrt(s2))
    values = np.zeros_like(times)
    p_center = int(round((pair.delta_e - (mi.mean - mj.mean)) / pair.omega))
    for direction in (0, +1, -1):
        p = p_center + direction
        while True:
            arg = mi.mean - mj.mean - pair.delta_e + p * pair.omega
            w = np.exp(-(arg**2) / (2.0 * s2))
            if w >= 1e-12:
                damp = np.exp(-0.5 * (pair.sigma * p * times) ** 2)
                values += w * damp * np.cos(pair.delta_e * times)
            elif direction != 0:
                break
            if direction == 0:
                break
            p += direction
    return pref * values


def separatrix_report(dist: ComponentDistribution, series: TimeSeries,
                      detection_kwargs: dict | None = None,
                      min_dominant_weight: float = 0.5) -> SeparatrixReport:
    """Diagnostics for states where the Gaussian structure breaks down.

    The state is flagged (``analytic_model_applies=False``) when chain
    detection fails outright, when the dominant detected chain (renormalized)
    fails the Gaussian gate of :func:`estimate_parameters`, or when that
    chain carries less than ``min_dominant_weight`` of the total weight.
    The decay-time proxy is the first time SP drops below twice the IPR.
    """
    value = ipr(dist)
    detection_failed = False
    gate_failed = False
    dominant_fraction = 0.0
    n_seq = 0
    try:
        seqs = detect_subsequences(dist, **(detection_kwargs or {}))
        n_seq = len(seqs)
        dominant = max(seqs, key=lambda s: s.captured_weight)
        dominant_fraction = dominant.captured_weight
        sub = ComponentDistribution(
            energies=dominant.energies,
            weights=dominant.weights / dominant.captured_weight)
        try:
            estimate_parameters(sub, enforce_gate=True)
        except GaussianGateError:
            gate_failed = True
    except (DetectionError, RuntimeError, ValueError):
        detection_failed = True
    applies = (not detection_failed and not gate_failed
               and dominant_fraction >= min_dominant_weight)
    below = np.flatnonzero(series.values < 2.0 * value)
    proxy = float(series.times[below[0]]) if below.size else np.inf
    return SeparatrixReport(analytic_model_applies=applies,
                            detection_failed=detection_failed,
                            gate_failed=gate_failed,
                            dominant_weight_fraction=dominant_fraction,
                            ipr=value, decay_time_proxy=proxy,
                            n_sequences=n_seq)
