"""Truncated Fock-space linear algebra for one- and two-mode optical states.

Everything here is a dense complex matrix over a photon-number basis with an
explicit occupation cutoff.  Two-mode objects use row-major mode ordering:
basis index = n_up * (n_max + 1) + n_down, with the "up" mode as the major
index.  That ordering is part of the public contract and is relied on by the
coherent-probe pipeline in :mod:`qiphase.strategies`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
DISPLACED_DEFICIT_TOL = 1e-8


class TruncationError(ValueError):
    """A construction lost more probability mass to the cutoff than allowed."""


class NonHermitianError(ValueError):
    """An operator that must be Hermitian is not, beyond tolerance."""


class EigenConvergenceError(RuntimeError):
    """The eigenvalue iteration did not converge within its budget."""


class InvalidDensityMatrixError(ValueError):
    """A density matrix violates Hermiticity, trace or positivity bounds."""


@dataclass(frozen=True)
class Cutoff:
    """Highest Fock occupation retained per mode (basis size n_max + 1)."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"cutoff n_max must be an integer >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class GaussianModeParams:
    """Displacement and variance of one displaced thermal mode.

    `sigma_sq` is the symmetric quadrature variance with vacuum = 1/2; the
    thermal occupation is derived as n_bar = sigma_sq - 1/2.  `delta` is the
    displacement amplitude and `phase` its argument, so the complex
    displacement is delta * exp(i * phase).
    """

    delta: float
    phase: float = 0.0
    sigma_sq: float = 0.5

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("displacement amplitude must be >= 0")
        if self.sigma_sq < 0.5:
            raise ValueError("quadrature variance must be >= 1/2 (vacuum)")

    @property
    def n_bar(self) -> float:
        return self.sigma_sq - 0.5

    @classmethod
    def from_occupation(cls, delta: float, n_bar: float, phase: float = 0.0):
        if n_bar < 0:
            raise ValueError("thermal occupation must be >= 0")
        return cls(delta=delta, phase=phase, sigma_sq=0.5 + n_bar)

    @property
    def displacement(self) -> complex:
        return self.delta * np.exp(1j * self.phase)


class FockOperator:
    """A dense complex operator over a truncated, possibly composite basis.

    `subsystem_dims` records the tensor factorisation of the basis: `(n,)`
    for a flat space and `(n1, n2)` for a two-factor space indexed
    row-major (first factor major).  Instances are immutable; the entry
    array is marked read-only.
    """

    __slots__ = ("entries", "subsystem_dims")

    def __init__(self, entries, subsystem_dims: Sequence[int] | None = None):
        arr = np.array(entries, dtype=complex, order="C")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator entries must be square, got shape {arr.shape}")
        if subsystem_dims is None:
            dims = (arr.shape[0],)
        else:
            dims = tuple(int(d) for d in subsystem_dims)
        if len(dims) not in (1, 2):
            raise ValueError("only one- and two-factor bases are supported")
        if int(np.prod(dims)) != arr.shape[0]:
            raise ValueError(f"subsystem dims {dims} do not match dimension {arr.shape[0]}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "subsystem_dims", dims)

    def __setattr__(self, name, value):
        raise AttributeError("FockOperator instances are immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.subsystem_dims)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.entries.conj().T, self.subsystem_dims)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_defect() <= tol


class DensityMatrix(FockOperator):
    """A quantum state: Hermitian, positive, trace-one up to a recorded deficit.

    `deficit` is the probability mass lost to the cutoff; the trace is
    required to sit within TRACE_TOL of 1 after allowing for it.  `valid`
    records that all checks passed at construction.
    """

    __slots__ = ("deficit", "valid")

    def __init__(self, entries, subsystem_dims=None, deficit: float = 0.0,
                 check_positive: bool = True):
        super().__init__(entries, subsystem_dims)
        object.__setattr__(self, "deficit", float(deficit))
        defect = self.hermiticity_defect()
        if defect > HERMITICITY_TOL:
            raise InvalidDensityMatrixError(
                f"not Hermitian: max entrywise defect {defect:.2e} > {HERMITICITY_TOL}")
        tr = self.trace().real
        if abs(tr - 1.0) > TRACE_TOL + abs(self.deficit):
            raise InvalidDensityMatrixError(
                f"trace {tr!r} not within {TRACE_TOL} of 1 (deficit {self.deficit:.2e})")
        if check_positive:
            low = float(np.linalg.eigvalsh(self.entries)[0])
            if low < EIGENVALUE_FLOOR:
                raise InvalidDensityMatrixError(
                    f"negative eigenvalue {low:.2e} below floor {EIGENVALUE_FLOOR}")
        object.__setattr__(self, "valid", True)


def annihilation_op(cutoff: Cutoff) -> FockOperator:
    """Single-mode ladder operator: entries[m, n] = sqrt(n) for m = n - 1."""
    return FockOperator(np.diag(np.sqrt(np.arange(1, cutoff.dim)), 1))


def number_op(cutoff: Cutoff) -> FockOperator:
    """Single-mode photon-number operator diag(0, 1, ..., n_max)."""
    return FockOperator(np.diag(np.arange(cutoff.dim, dtype=complex)))


def total_number_op(cutoff: Cutoff) -> FockOperator:
    """Two-mode total photon number diag(n_up + n_down)."""
    n = np.arange(cutoff.dim)
    total = (n[:, None] + n[None, :]).ravel()
    return FockOperator(np.diag(total.astype(complex)), (cutoff.dim, cutoff.dim))


def beamsplitter_generator(cutoff: Cutoff) -> FockOperator:
    """Two-mode exchange generator a_up a_down^dag + a_up^dag a_down.

    Hermitian and block diagonal in the total photon number, so it couples
    only states with equal n_up + n_down.
    """
    a = annihilation_op(cutoff).entries
    s = np.kron(a, a.conj().T) + np.kron(a.conj().T, a)
    return FockOperator(s, (cutoff.dim, cutoff.dim))


def thermal_state(n_bar: float, cutoff: Cutoff) -> DensityMatrix:
    """Thermal state with mean occupation n_bar, renormalised on the cutoff basis.

    The untruncated weights are p(n) = n_bar^n / (1 + n_bar)^(n+1); the tail
    mass beyond the cutoff is recorded as the deficit.
    """
    if n_bar < 0:
        raise ValueError("thermal occupation must be >= 0")
    p = np.zeros(cutoff.dim)
    if n_bar == 0:
        p[0] = 1.0
        deficit = 0.0
    else:
        n = np.arange(cutoff.dim)
        ratio = n_bar / (1.0 + n_bar)
        p = ratio ** n / (1.0 + n_bar)
        deficit = ratio ** cutoff.dim
        p = p / p.sum()
    return DensityMatrix(np.diag(p.astype(complex)), deficit=deficit,
                         check_positive=False)


def displacement_matrix(z: complex, cutoff: Cutoff) -> FockOperator:
    """Matrix elements of the displacement operator D(z) on the cutoff basis.

    For m >= n: <m|D(z)|n> = sqrt(n!/m!) z^(m-n) exp(-|z|^2/2) L_n^(m-n)(|z|^2),
    with the conjugate-transpose relation for m < n.  The associated-Laguerre
    form is exact entry by entry, including at the truncation boundary.
    """
    dim = cutoff.dim
    az2 = abs(z) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lower = m >= n
    k = np.where(lower, m - n, n - m)
    small = np.where(lower, n, m)
    logpref = 0.5 * (gammaln(small + 1) - gammaln(small + k + 1))
    lag = eval_genlaguerre(small, k, az2)
    base = np.where(lower, z, -np.conj(z)) if z != 0 else np.zeros((dim, dim), dtype=complex)
    with np.errstate(invalid="ignore"):
        power = np.where(k == 0, 1.0 + 0j, np.asarray(base, dtype=complex) ** k)
    d = np.exp(logpref - az2 / 2.0) * power * lag
    return FockOperator(d)


def displaced_thermal(params: GaussianModeParams, cutoff: Cutoff) -> DensityMatrix:
    """Displaced thermal state D(z) rho_th(n_bar) D(z)^dag on the cutoff basis.

    Raises TruncationError when the retained trace drops below
    1 - DISPLACED_DEFICIT_TOL; otherwise the truncation loss is kept (no
    renormalisation) and reported via the deficit field.
    """
    d = displacement_matrix(params.displacement, cutoff).entries
    th = thermal_state(params.n_bar, cutoff).entries
    rho = d @ th @ d.conj().T
    deficit = 1.0 - float(np.trace(rho).real)
    if deficit > DISPLACED_DEFICIT_TOL:
        raise TruncationError(
            f"truncation deficit {deficit:.3e} exceeds {DISPLACED_DEFICIT_TOL}; "
            f"raise the cutoff (n_max={cutoff.n_max})")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, deficit=max(deficit, 0.0), check_positive=False)


def total_occupations(subsystem_dims: Sequence[int]) -> np.ndarray:
    """Total photon number of each basis index for the given factorisation."""
    dims = tuple(subsystem_dims)
    if len(dims) == 1:
        return np.arange(dims[0])
    n1 = np.arange(dims[0])
    n2 = np.arange(dims[1])
    return (n1[:, None] + n2[None, :]).ravel()


def phase_average(rho: DensityMatrix) -> DensityMatrix:
    """Project out coherences between different total photon numbers.

    This is the exact uniform average over a common phase on all modes: the
    entry between basis states of unequal total occupation is zeroed, and
    everything else (in particular every diagonal entry) is untouched.
    """
    totals = total_occupations(rho.subsystem_dims)
    mask = totals[:, None] == totals[None, :]
    return DensityMatrix(np.where(mask, rho.entries, 0.0), rho.subsystem_dims,
                         deficit=rho.deficit, check_positive=False)


def quadrature_node_bound(subsystem_dims: Sequence[int]) -> int:
    """Minimum node count for exact phase-average quadrature at this cutoff."""
    n_max_total = max(d - 1 for d in subsystem_dims)
    return 2 * (2 * n_max_total) + 1


def phase_average_quadrature(rho_builder: Callable[[float], DensityMatrix],
                             nodes: int) -> DensityMatrix:
    """Average rho(xi) over xi in [-pi, pi) with a uniform trapezoidal rule.

    The integrand's entries are trigonometric polynomials in xi whose degree
    is bounded by the cutoff, so the rule is exact once `nodes` reaches
    quadrature_node_bound; fewer nodes raise ValueError.
    """
    probe = rho_builder(0.0)
    bound = quadrature_node_bound(probe.subsystem_dims)
    if nodes < bound:
        raise ValueError(f"need at least {bound} quadrature nodes, got {nodes}")
    acc = np.zeros((probe.dim, probe.dim), dtype=complex)
    worst_deficit = 0.0
    for k in range(nodes):
        xi = -np.pi + 2.0 * np.pi * k / nodes
        term = rho_builder(xi)
        acc += term.entries
        worst_deficit = max(worst_deficit, term.deficit)
    acc /= nodes
    acc = 0.5 * (acc + acc.conj().T)
    return DensityMatrix(acc, probe.subsystem_dims, deficit=worst_deficit)


def hermitian_eig(op: FockOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator, eigenvalues descending.

    Returns (w, V) with columns of V the eigenvectors matching w.  Inputs
    whose Hermiticity defect exceeds 1e-10 are rejected.
    """
    defect = op.hermiticity_defect()
    if defect > 1e-10:
        raise NonHermitianError(f"Hermiticity defect {defect:.2e} exceeds 1e-10")
    try:
        w, v = np.linalg.eigh(op.entries)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(rho: FockOperator) -> FockOperator:
    """Positive square root via eigendecomposition.

    Eigenvalues in [EIGENVALUE_FLOOR, 0) are treated as roundoff and clamped
    to zero; anything below the floor is a genuine negativity and raises.
    """
    w, v = hermitian_eig(rho)
    if w[-1] < EIGENVALUE_FLOOR:
        raise InvalidDensityMatrixError(
            f"eigenvalue {w[-1]:.2e} below floor {EIGENVALUE_FLOOR}")
    root = np.sqrt(np.clip(w, 0.0, None))
    return FockOperator((v * root) @ v.conj().T, rho.subsystem_dims)


def uhlmann_fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2.

    Evaluated as the squared nuclear norm of sqrt(rho2) sqrt(rho1), which
    avoids taking square roots of roundoff-level eigenvalues and keeps the
    result accurate for rank-deficient states.
    """
    if rho1.dim != rho2.dim:
        raise ValueError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    product = psd_sqrt(rho2).entries @ psd_sqrt(rho1).entries
    nuclear = float(np.linalg.svd(product, compute_uv=False).sum())
    return float(np.clip(nuclear ** 2, 0.0, 1.0))
