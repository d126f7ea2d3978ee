"""Shared fixtures: desk-scale eigensystems (disk-cached) and synthetic chains."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

from spinquench import (
    CoherentSpec, Model, ModelSpec, Parity,
    bloch_coefficients, build_dicke, build_lmg, components,
    dicke_product_state, diagonalize, parity_project, solve_q0_for_energy,
)
from spinquench.coherent import ComponentDistribution
from spinquench.hamiltonians import EigenSystem

CACHE_DIR = Path(os.environ.get(
    "SPINQUENCH_TEST_CACHE",
    os.path.join(tempfile.gettempdir(), "spinquench_test_cache")))
CACHE_DIR.mkdir(parents=True, exist_ok=True)

LMG_PAPER = ModelSpec(model=Model.LMG, j=2000, parity=Parity.PLUS,
                      gamma_x=-3.0, gamma_y=-5.0)
DICKE_DESK = ModelSpec(model=Model.DICKE, j=32, parity=Parity.PLUS,
                       omega=1.0, omega0=1.0, gamma=1.0, nmax=216)
DICKE_TARGET_ENERGY = -1.8

# Bloch coordinates of the six fixed-energy scan states; (d) sits on the
# separatrix of the nonlinear-resonance region, the others are regular.
DICKE_SCAN_JZ = {
    "a": -0.505, "b": -0.452, "c": -0.116,
    "d": 0.019, "e": 0.113, "f": 0.140,
}


def cached_eigensystem(spec: ModelSpec) -> EigenSystem:
    """Diagonalize once per parameter set; later runs reload from disk."""
    if spec.model is Model.LMG:
        matrix, basis = build_lmg(spec)
        key = (f"lmg_j{spec.j:g}_{spec.parity.value}"
               f"_gx{spec.gamma_x:g}_gy{spec.gamma_y:g}")
    else:
        matrix, basis = build_dicke(spec)
        key = (f"dicke_j{spec.j:g}_n{spec.nmax}_{spec.parity.value}"
               f"_w{spec.omega:g}_w0{spec.omega0:g}_g{spec.gamma:g}")
    path = CACHE_DIR / f"{key}.npz"
    if path.exists():
        data = np.load(path)
        if data["vals"].size == basis.dimension:
            return EigenSystem(eigenvalues=data["vals"],
                               eigenvectors=data["vecs"], basis=basis)
    es = diagonalize(matrix, basis)
    np.savez(path, vals=es.eigenvalues, vecs=es.eigenvectors)
    return es


@pytest.fixture(scope="session")
def lmg_paper_eigensystem() -> EigenSystem:
    return cached_eigensystem(LMG_PAPER)


@pytest.fixture(scope="session")
def lmg_paper_distribution(lmg_paper_eigensystem) -> ComponentDistribution:
    basis = lmg_paper_eigensystem.basis
    raw = bloch_coefficients(LMG_PAPER.j, -np.cos(np.pi / 3.0), np.pi / 2.0)
    state = parity_project(raw, basis, LMG_PAPER.j)
    return components(lmg_paper_eigensystem, state)


@pytest.fixture(scope="session")
def dicke_eigensystem() -> EigenSystem:
    return cached_eigensystem(DICKE_DESK)


def dicke_scan_distribution(eigensystem: EigenSystem,
                            jz0_over_j: float) -> ComponentDistribution:
    q0 = solve_q0_for_energy(DICKE_DESK, jz0_over_j, 0.0, 0.0,
                             DICKE_TARGET_ENERGY)
    state = CoherentSpec(jz0_over_j=jz0_over_j, phi0=0.0, q0=q0, p0=0.0)
    raw = dicke_product_state(DICKE_DESK.j, state, DICKE_DESK.nmax)
    projected = parity_project(raw, eigensystem.basis, DICKE_DESK.j,
                               DICKE_DESK.nmax)
    return components(eigensystem, projected)


@pytest.fixture(scope="session")
def dicke_states(dicke_eigensystem) -> dict[str, ComponentDistribution]:
    return {tag: dicke_scan_distribution(dicke_eigensystem, jz)
            for tag, jz in DICKE_SCAN_JZ.items()}


# ---------------------------------------------------------------- synthetic


def quadratic_chain(n: int, e0: float, omega: float, e2: float,
                    center: float, sigma_k: float,
                    total: float) -> tuple[np.ndarray, np.ndarray]:
    """One quasi-harmonic chain: E_k quadratic in k, Gaussian weights."""
    k = np.arange(n, dtype=float)
    energies = e0 + omega * k + e2 * k * k
    weights = np.exp(-((k - center) ** 2) / (2.0 * sigma_k**2))
    weights *= total / weights.sum()
    return energies, weights


def merge_chains(chains: list[tuple[np.ndarray, np.ndarray]]
                 ) -> tuple[ComponentDistribution, list[np.ndarray]]:
    """Sort interleaved chains into one distribution; return memberships."""
    energies = np.concatenate([c[0] for c in chains])
    weights = np.concatenate([c[1] for c in chains])
    order = np.argsort(energies)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    memberships, offset = [], 0
    for e, _ in chains:
        memberships.append(np.sort(rank[offset:offset + e.size]))
        offset += e.size
    dist = ComponentDistribution(energies=energies[order],
                                 weights=weights[order])
    return dist, memberships


def brute_force_sp(dist: ComponentDistribution,
                   times: np.ndarray) -> np.ndarray:
    """Direct |sum_k w_k exp(-i E_k t)|^2 with no approximations."""
    phases = np.exp(-1j * np.outer(times, dist.energies))
    return np.abs(phases @ (dist.weights / dist.total_weight)) ** 2


def brute_force_cross(e_i, w_i, e_j, w_j, times: np.ndarray) -> np.ndarray:
    """Direct double-sum interference 2 Re[S_i S_j*] between two chains."""
    s_i = np.exp(-1j * np.outer(times, e_i)) @ w_i
    s_j = np.exp(-1j * np.outer(times, e_j)) @ w_j
    return 2.0 * np.real(s_i * np.conj(s_j))


TWO_CHAIN_SPEC = [
    dict(n=81, e0=0.0, omega=1.0, e2=-4e-4, center=40.0, sigma_k=8.0,
         total=0.85),
    dict(n=81, e0=0.23, omega=1.0, e2=-4e-4, center=43.0, sigma_k=6.0,
         total=0.15),
]

THREE_CHAIN_SPEC = TWO_CHAIN_SPEC[:1] + [
    dict(n=81, e0=0.23, omega=1.0, e2=-4e-4, center=43.0, sigma_k=6.0,
         total=0.12),
    dict(n=81, e0=0.41, omega=1.0, e2=-4e-4, center=37.0, sigma_k=5.0,
         total=0.08),
]
THREE_CHAIN_SPEC[0] = dict(TWO_CHAIN_SPEC[0], total=0.80)


@pytest.fixture
def two_chain():
    chains = [quadratic_chain(**c) for c in TWO_CHAIN_SPEC]
    dist, members = merge_chains(chains)
    return dist, members, chains


@pytest.fixture
def three_chain():
    chains = [quadratic_chain(**c) for c in THREE_CHAIN_SPEC]
    dist, members = merge_chains(chains)
    return dist, members, chains
