"""LMG and Dicke Hamiltonian matrices in parity-resolved bases.

The LMG Hamiltonian is

    H = Jz + gx/(2J-1) Jx^2 + gy/(2J-1) Jy^2

acting on a single pseudospin-J multiplet.  The Dicke Hamiltonian couples
the pseudospin to one bosonic mode,

    H = w a'a + w0 Jz + g sqrt(2/J) Jx (a + a').

Both conserve a discrete parity, so each matrix is built directly in one
parity sector: the positive LMG sector holds m = -J, -J+2, ..., the
positive Dicke sector holds Fock x spin labels (n, m) with m + J + n even.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

__all__ = [
    "Model", "Parity", "ModelSpec", "SectorBasis", "EigenSystem",
    "InvalidSpecError", "DimensionLimitError",
    "build_lmg", "build_dicke", "critical_values", "diagonalize",
    "cutoff_convergence",
]

DEFAULT_DIMENSION_LIMIT = 12_000


class Model(str, Enum):
    LMG = "lmg"
    DICKE = "dicke"


class Parity(str, Enum):
    PLUS = "plus"
    MINUS = "minus"


class InvalidSpecError(ValueError):
    """Raised when a ModelSpec violates its invariants."""


class DimensionLimitError(RuntimeError):
    """Raised when a requested matrix exceeds the configured dimension cap."""


@dataclass(frozen=True)
class ModelSpec:
    """One quantum problem: model, couplings, pseudospin, parity sector.

    For the LMG model the couplings are (gamma_x, gamma_y); for the Dicke
    model they are (omega, omega0, gamma) plus a boson cutoff ``nmax``.
    """

    model: Model
    j: float
    parity: Parity = Parity.PLUS
    gamma_x: float = 0.0
    gamma_y: float = 0.0
    omega: float = 1.0
    omega0: float = 1.0
    gamma: float = 0.0
    nmax: int | None = None
    dimension_limit: int = DEFAULT_DIMENSION_LIMIT

    def __post_init__(self):
        if self.j <= 0:
            raise InvalidSpecError(f"pseudospin J must be positive, got {self.j}")
        two_j = round(2 * self.j)
        if abs(2 * self.j - two_j) > 1e-12:
            raise InvalidSpecError(f"J must be a half-integer, got {self.j}")
        if self.model is Model.LMG:
            if two_j < 2:
                raise InvalidSpecError("LMG requires 2J >= 2 (2J-1 in the denominator)")
        elif self.model is Model.DICKE:
            if self.nmax is None or self.nmax < 0:
                raise InvalidSpecError("Dicke spec requires a nonnegative boson cutoff nmax")

    def with_nmax(self, nmax: int) -> "ModelSpec":
        return ModelSpec(
            model=self.model, j=self.j, parity=self.parity,
            gamma_x=self.gamma_x, gamma_y=self.gamma_y,
            omega=self.omega, omega0=self.omega0, gamma=self.gamma,
            nmax=nmax, dimension_limit=self.dimension_limit,
        )


@dataclass(frozen=True)
class SectorBasis:
    """Ordered labels of one parity sector.

    LMG labels are m values; Dicke labels are (n, m) pairs ordered
    lexicographically.
    """

    labels: tuple
    model: Model
    parity: Parity

    @property
    def dimension(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with column-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: SectorBasis
    residual_norm: float = 0.0


def _lmg_m_values(j: float, parity: Parity) -> np.ndarray:
    two_j = round(2 * j)
    start = 0 if parity is Parity.PLUS else 1
    return -j + np.arange(start, two_j + 1, 2, dtype=float)


def _ladder_up(j: float, m: np.ndarray) -> np.ndarray:
    """Coefficient of J+|J,m> = c(m)|J,m+1>."""
    return np.sqrt(np.maximum(j * (j + 1) - m * (m + 1), 0.0))


def build_lmg(spec: ModelSpec) -> tuple[np.ndarray, SectorBasis]:
    """Dense symmetric LMG matrix in one parity sector.

    Jx^2 and Jy^2 couple m to m and m +/- 2, so the sector matrix is
    tridiagonal in sector index; it is returned as a dense symmetric array.
    """
    if spec.model is not Model.LMG:
        raise InvalidSpecError("build_lmg requires an LMG spec")
    j = spec.j
    m = _lmg_m_values(j, spec.parity)
    if m.size == 0:
        raise InvalidSpecError(f"parity sector {spec.parity.value} is empty for J={j}")
    if m.size > spec.dimension_limit:
        raise DimensionLimitError(
            f"sector dimension {m.size} exceeds limit {spec.dimension_limit}")

    up1 = _ladder_up(j, m)              # J+ |m> -> |m+1>
    up2 = _ladder_up(j, m + 1)          # J+ |m+1> -> |m+2>

    # Jx^2, Jy^2 share the diagonal (J+J- + J-J+)/4; the m <-> m+2 element
    # is +J+^2/4 for Jx^2 and -J+^2/4 for Jy^2.
    dn1 = _ladder_up(j, m - 1)          # J- |m> -> |m-1> coefficient
    diag_sq = (up1**2 + dn1**2) / 4.0
    off_sq = (up1 * up2 / 4.0)[:-1]     # couples sector index i -> i+1 (m -> m+2)

    pref = 1.0 / (2 * j - 1)
    h = np.zeros((m.size, m.size))
    np.fill_diagonal(h, m + pref * (spec.gamma_x + spec.gamma_y) * diag_sq)
    idx = np.arange(m.size - 1)
    h[idx, idx + 1] = pref * (spec.gamma_x - spec.gamma_y) * off_sq
    h[idx + 1, idx] = h[idx, idx + 1]
    basis = SectorBasis(labels=tuple(m.tolist()), model=Model.LMG, parity=spec.parity)
    return h, basis


def dicke_sector_labels(j: float, nmax: int, parity: Parity) -> list[tuple[int, float]]:
    """(n, m) labels of one Dicke parity sector, lexicographic in (n, m)."""
    two_j = round(2 * j)
    want = 0 if parity is Parity.PLUS else 1
    labels = []
    for n in range(nmax + 1):
        for k in range(two_j + 1):
            if (k + n) % 2 == want:
                labels.append((n, -j + k))
    return labels


def build_dicke(spec: ModelSpec) -> tuple[np.ndarray, SectorBasis]:
    """Dense symmetric Dicke matrix in the truncated Fock x spin sector basis."""
    if spec.model is not Model.DICKE:
        raise InvalidSpecError("build_dicke requires a Dicke spec")
    j, nmax = spec.j, spec.nmax
    labels = dicke_sector_labels(j, nmax, spec.parity)
    dim = len(labels)
    if dim == 0:
        raise InvalidSpecError("empty Dicke parity sector")
    if dim > spec.dimension_limit:
        raise DimensionLimitError(
            f"sector dimension {dim} exceeds limit {spec.dimension_limit} "
            f"(J={j}, nmax={nmax})")

    index = {lab: i for i, lab in enumerate(labels)}
    h = np.zeros((dim, dim))
    coup = spec.gamma * np.sqrt(2.0 / j)
    for (n, m), i in index.items():
        h[i, i] = spec.omega * n + spec.omega0 * m
        # Jx couples m -> m+1 with coefficient c+(m)/2; boson couples n -> n+1.
        cp = 0.5 * np.sqrt(j * (j + 1) - m * (m + 1))
        if m + 1 <= j:
            for n2, amp in ((n - 1, np.sqrt(n)), (n + 1, np.sqrt(n + 1))):
                i2 = index.get((n2, m + 1))
                if i2 is not None:
                    h[i2, i] += coup * cp * amp
                    h[i, i2] += coup * cp * amp
    basis = SectorBasis(labels=tuple(labels), model=Model.DICKE, parity=spec.parity)
    return h, basis


def critical_values(spec: ModelSpec) -> dict:
    """Classical critical energies / couplings for one spec.

    LMG (deformed phase, both couplings < -1): the ground-state energy per
    spin is (g + 1/g)/2 evaluated at the deeper of the two wells and the
    ESQPT saddle sits at the same expression for the shallower one.  Dicke:
    gamma_cr = sqrt(w w0)/2 and, in the superradiant phase, the classical
    ground energy from minimizing the scaled Hamiltonian.
    """
    out: dict = {}
    if spec.model is Model.LMG:
        gx, gy = spec.gamma_x, spec.gamma_y
        deformed = [g for g in (gx, gy) if g < -1]
        stat = {g: (g + 1.0 / g) / 2.0 for g in (gx, gy) if g != 0}
        if len(deformed) == 2:
            vals = sorted(stat[g] for g in deformed)
            out["e_gs"] = spec.j * vals[0]
            out["e_esqpt"] = spec.j * vals[1]
        else:
            # normal phase (or only one deformed direction): no ESQPT energy
            out["gamma_cr"] = -1.0
            if deformed:
                out["e_gs"] = spec.j * stat[deformed[0]]
    else:
        w, w0, g = spec.omega, spec.omega0, spec.gamma
        gcr = np.sqrt(w * w0) / 2.0
        out["gamma_cr"] = gcr
        if g > gcr:
            # minimize h = (w/2) q^2 + w0 jz + 2 g sqrt(1-jz^2) q over (q, jz)
            # at cos(phi) = -1 equivalent branch: q* = 2g sqrt(1-jz^2)/w
            jz = np.linspace(-1.0, 1.0, 200001)
            q = 2.0 * g * np.sqrt(1.0 - jz**2) / w
            h = 0.5 * w * q**2 + w0 * jz - 2.0 * g * np.sqrt(1.0 - jz**2) * q
            out["e_gs"] = spec.j * float(h.min())
        else:
            out["e_gs"] = -spec.j * w0
    return out


def diagonalize(matrix: np.ndarray, basis: SectorBasis = None) -> EigenSystem:
    """Full symmetric eigendecomposition with a fixed sign convention.

    Eigenvalues ascend; each eigenvector is flipped so its largest-magnitude
    entry is positive, making outputs reproducible across LAPACK builds.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("diagonalize requires a square matrix")
    if not np.array_equal(matrix, matrix.T):
        raise ValueError("diagonalize requires an exactly symmetric matrix")
    try:
        vals, vecs = scipy.linalg.eigh(matrix)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigensolver failed on {matrix.shape[0]}-dim matrix: {exc}")
    # sign convention
    pick = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[pick, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    resid = np.max(np.linalg.norm(matrix @ vecs - vecs * vals, axis=0)) if vals.size else 0.0
    scale = max(np.max(np.abs(vals)), 1.0)
    if resid > 1e-9 * scale:  # pragma: no cover - diagnostic path
        raise RuntimeError(
            f"eigensolver residual {resid:.3e} exceeds 1e-9 * max|E| = {1e-9 * scale:.3e}")
    return EigenSystem(eigenvalues=vals, eigenvectors=vecs, basis=basis,
                       residual_norm=float(resid))


def cutoff_convergence(spec: ModelSpec, energy_window: tuple[float, float],
                       nmax_start: int = 20, ladder_factor: float = 1.2,
                       tol: float = 1e-8) -> int:
    """Smallest cutoff on a geometric ladder with converged window eigenvalues.

    Climbs nmax by ``ladder_factor`` until every eigenvalue inside
    ``energy_window`` moves by less than ``tol * omega`` under the next
    ladder step.  Raises DimensionLimitError when the ladder would exceed
    the spec's dimension cap.
    """
    if spec.model is not Model.DICKE:
        raise InvalidSpecError("cutoff_convergence applies to Dicke specs only")
    lo, hi = energy_window
    nmax = max(int(nmax_start), 1)

    def window_vals(n):
        vals = scipy.linalg.eigvalsh(build_dicke(spec.with_nmax(n))[0])
        return vals, vals[(vals >= lo) & (vals <= hi)]

    vals_prev, win_prev = window_vals(nmax)
    while True:
        nmax_next = max(int(np.ceil(nmax * ladder_factor)), nmax + 1)
        dim_next = len(dicke_sector_labels(spec.j, nmax_next, spec.parity))
        if dim_next > spec.dimension_limit:
            raise DimensionLimitError(
                f"convergence ladder needs dimension {dim_next} > limit "
                f"{spec.dimension_limit}")
        vals_next, win_next = window_vals(nmax_next)
        if win_prev.size and win_prev.size <= win_next.size:
            shift = np.max(np.abs(win_next[: win_prev.size] - win_prev))
            if shift < tol * spec.omega:
                return nmax
        nmax, win_prev = nmax_next, win_next
