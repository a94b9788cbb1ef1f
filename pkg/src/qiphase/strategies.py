"""The three illumination strategies for noisy-interferometer phase estimation.

Case 1 probes the channel with a single photon in an equal superposition of
one arm-up and one arm-down mode; Case 2 entangles that photon with a
retained d-mode ancilla; Case 3 sends a coherent state of mean photon
number one.  The channel has power transmissivity T, thermal background b
per mode, and a uniform random phase common to all modes, which preserves
only the relative phase between the two arms.

Cases 1 and 2 have closed-form per-trial Fisher informations.  Case 3 is
evaluated numerically on a truncated Fock basis, twice: through a
perturbative square-root expansion of the rotated state (the matrix
pipeline) and through the fidelity limit, which serve as cross-checking
oracles for each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fock import (
    Cutoff,
    DensityMatrix,
    FockOperator,
    GaussianModeParams,
    TruncationError,
    displaced_thermal,
    phase_average,
    phase_average_quadrature,
    quadrature_node_bound,
    thermal_state,
)
from .qfi import (
    Convention,
    ConvergenceCertificate,
    NumericalBreakdownError,
    Povm,
    QfiResult,
    bures_qfi,
    converge_cutoff,
)

# The two-mode exchange generator equals the photon-number difference
# between the interferometer arms, so rotating by an angle eps advances the
# physical arm phase difference by 2*eps.  Dividing generator-parameter
# Fisher information by this factor squared expresses it per unit of the
# physical phase.
PHASE_PER_GENERATOR_ANGLE = 2.0

MAX_EXPLICIT_ENTANGLED_MODES = 8
DEFAULT_CUTOFF = Cutoff(24)
CASE3_SUPPORT_TOL = 1e-12


class DegenerateChannelError(ValueError):
    """T = 0 and b = 0: no photons ever arrive, nothing can be estimated."""


class ExplicitDimensionError(ValueError):
    """Explicit entangled-state matrices are capped at d = 8 (dimension 64)."""


class EmptySupportError(ValueError):
    """The support threshold removed every basis state."""


@dataclass(frozen=True)
class ChannelParams:
    """Physical channel: transmissivity, per-mode background, mode count."""

    transmissivity: float
    noise_per_mode: float
    modes: int

    def __post_init__(self):
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.transmissivity}")
        if self.noise_per_mode < 0.0:
            raise ValueError(f"per-mode noise must be >= 0, got {self.noise_per_mode}")
        if int(self.modes) != self.modes or self.modes < 2 or self.modes % 2:
            raise ValueError(f"mode count must be an even integer >= 2, got {self.modes}")


@dataclass(frozen=True)
class DerivedChannel:
    """Signal fraction at the detector and the per-trial detection probability."""

    eta: float
    detect_prob: float


@dataclass(frozen=True)
class EntangledBasisIndex:
    """Label (k, m) of one maximally entangled probe state; both range over 1..d."""

    k: int = 1
    m: int = 1

    def validate(self, d: int) -> None:
        if not (1 <= self.k <= d and 1 <= self.m <= d):
            raise ValueError(f"basis index {self} out of range for d={d}")


def derive_channel(params: ChannelParams) -> DerivedChannel:
    """Detection probability p = T + b d (1 - T) and signal fraction eta = T / p.

    The identity eta * p = T holds to machine precision by construction.
    """
    t, b, d = params.transmissivity, params.noise_per_mode, params.modes
    p = t + b * d * (1.0 - t)
    if p == 0.0:
        raise DegenerateChannelError("T = 0 and b = 0 give zero detection probability")
    return DerivedChannel(eta=t / p, detect_prob=p)


# ---------------------------------------------------------------------------
# Closed forms for Cases 1 and 2
# ---------------------------------------------------------------------------

def case1_qfi_per_photon(params: ChannelParams) -> float:
    """Fisher information per detected photon, separable probe (paper convention)."""
    ch = derive_channel(params)
    eta, d = ch.eta, params.modes
    return eta ** 2 * d / (4.0 * (1.0 - eta) + 2.0 * eta * d)


def case2_qfi_per_pair(params: ChannelParams) -> float:
    """Fisher information per detected pair, entangled probe (paper convention)."""
    ch = derive_channel(params)
    eta, d = ch.eta, params.modes
    return d ** 2 * eta ** 2 / (4.0 * (1.0 - eta) + 2.0 * eta * d ** 2)


def _apply_convention(value: float, convention: Convention) -> float:
    return 2.0 * value if convention is Convention.STANDARD else value


def case1_closed(params: ChannelParams,
                 convention: Convention = Convention.PAPER) -> QfiResult:
    """Per-trial Fisher information of the separable single-photon strategy.

    The per-photon form times the detection probability simplifies exactly to
    T^2 / (2 (T + 2 b (1 - T))), which carries no dependence on the mode
    count: the optimal measurement only ever monitors two modes.
    """
    derive_channel(params)
    t, b = params.transmissivity, params.noise_per_mode
    value = t ** 2 / (2.0 * (t + 2.0 * b * (1.0 - t)))
    return QfiResult(value=_apply_convention(value, convention),
                     strategy="case1", convention=convention)


def case2_closed(params: ChannelParams,
                 convention: Convention = Convention.PAPER) -> QfiResult:
    """Per-trial Fisher information of the ancilla-entangled strategy.

    Equals T^2 / (2 (T + 2 b (1 - T) / d)): the ancilla dilutes background
    coincidences over d^2 outcomes, so the noise term shrinks by 1/d and the
    value grows monotonically towards T/2 as d increases.
    """
    derive_channel(params)
    t, b, d = params.transmissivity, params.noise_per_mode, params.modes
    value = t ** 2 / (2.0 * (t + 2.0 * b * (1.0 - t) / d))
    return QfiResult(value=_apply_convention(value, convention),
                     strategy="case2", convention=convention)


def case1_boxed(params: ChannelParams) -> float:
    """Diagnostic variant with the noise term subtracted, T^2 / (2 (T - (1-T) b)).

    Inconsistent with the per-photon chain; emitted only for comparison.
    NaN when the denominator vanishes.
    """
    t, b = params.transmissivity, params.noise_per_mode
    denom = 2.0 * (t - (1.0 - t) * b)
    return t ** 2 / denom if denom != 0.0 else math.nan


def case2_boxed(params: ChannelParams) -> float:
    """Diagnostic variant T^2 / (2 (T - (1-T) b / d)); see case1_boxed."""
    t, b, d = params.transmissivity, params.noise_per_mode, params.modes
    denom = 2.0 * (t - (1.0 - t) * b / d)
    return t ** 2 / denom if denom != 0.0 else math.nan


# ---------------------------------------------------------------------------
# Explicit output states, Cases 1 and 2
# ---------------------------------------------------------------------------

def case1_rho(theta: float, params: ChannelParams) -> DensityMatrix:
    """Post-selected single-photon state at the channel output.

    Basis ordering: index 0 is the probe mode |up>, index 1 the conjugate
    mode |down>, and the remaining d - 2 indices are abstract fill modes.
    The state is (1 - eta)/d times the identity plus eta times the projector
    onto cos(theta/2)|up> + i sin(theta/2)|down>.
    """
    ch = derive_channel(params)
    d = params.modes
    psi = np.zeros(d, dtype=complex)
    psi[0] = math.cos(theta / 2.0)
    psi[1] = 1j * math.sin(theta / 2.0)
    rho = (1.0 - ch.eta) / d * np.eye(d) + ch.eta * np.outer(psi, psi.conj())
    return DensityMatrix(rho, (d,), check_positive=False)


def case1_rho_prime(params: ChannelParams) -> FockOperator:
    """Phase derivative of case1_rho at theta = 0: -(i eta / 2)(|u><d| - |d><u|)."""
    ch = derive_channel(params)
    d = params.modes
    rp = np.zeros((d, d), dtype=complex)
    rp[0, 1] = -1j * ch.eta / 2.0
    rp[1, 0] = 1j * ch.eta / 2.0
    return FockOperator(rp, (d,))


def entangled_basis(idx: EntangledBasisIndex, params: ChannelParams) -> np.ndarray:
    """Maximally entangled probe |k, m> over signal x ancilla, as a d^2 vector.

    |k, m> = d^(-1/2) sum_j exp(2 pi i j k / d) |phi_j>_S |chi_(j+m)>_A with
    j = 1..d and the ancilla label taken modulo d.  Signal-major ordering:
    index = (j - 1) * d + (ancilla - 1).  Even j labels carry the +theta/2
    arm, odd j the -theta/2 arm.
    """
    d = params.modes
    idx.validate(d)
    vec = np.zeros(d * d, dtype=complex)
    for j in range(1, d + 1):
        anc = (j + idx.m - 1) % d  # zero-based ancilla label
        vec[(j - 1) * d + anc] = np.exp(2j * np.pi * j * idx.k / d)
    return vec / math.sqrt(d)


def entangled_rotation(theta: float, params: ChannelParams) -> FockOperator:
    """Arm-phase rotation on the signal factor, identity on the ancilla.

    Diagonal: signal label j picks up exp(+i theta/2) when j is even (the
    up arm) and exp(-i theta/2) when odd, which rotates every |k, m> into
    cos(theta/2)|k, m> + i sin(theta/2)|k + d/2, m>.
    """
    d = params.modes
    phases = np.empty(d * d, dtype=complex)
    for j in range(1, d + 1):
        sign = 1.0 if j % 2 == 0 else -1.0
        phases[(j - 1) * d:(j - 1) * d + d] = np.exp(0.5j * sign * theta)
    return FockOperator(np.diag(phases), (d, d))


def shifted_index(idx: EntangledBasisIndex, d: int) -> EntangledBasisIndex:
    """The partner label (k + d/2, m), with k wrapped back into 1..d."""
    return EntangledBasisIndex(k=(idx.k + d // 2 - 1) % d + 1, m=idx.m)


def case2_rho(theta: float, params: ChannelParams,
              idx: EntangledBasisIndex = EntangledBasisIndex()) -> DensityMatrix:
    """Photon-pair state at the channel output for the entangled strategy.

    (1 - eta)/d^2 times the identity on the d^2 space plus eta times the
    projector onto the rotated probe.  Explicit construction is capped at
    d = 8; larger d is fully covered by case2_closed.
    """
    d = params.modes
    if d > MAX_EXPLICIT_ENTANGLED_MODES:
        raise ExplicitDimensionError(
            f"explicit entangled matrices are limited to d <= "
            f"{MAX_EXPLICIT_ENTANGLED_MODES}, got d={d}; use case2_closed")
    ch = derive_channel(params)
    psi = entangled_rotation(theta, params).entries @ entangled_basis(idx, params)
    dim = d * d
    rho = (1.0 - ch.eta) / dim * np.eye(dim) + ch.eta * np.outer(psi, psi.conj())
    return DensityMatrix(rho, (d, d), check_positive=False)


def case2_rho_prime(params: ChannelParams,
                    idx: EntangledBasisIndex = EntangledBasisIndex()) -> FockOperator:
    """Phase derivative of case2_rho at theta = 0, in analytic form."""
    d = params.modes
    if d > MAX_EXPLICIT_ENTANGLED_MODES:
        raise ExplicitDimensionError(
            f"explicit entangled matrices are limited to d <= "
            f"{MAX_EXPLICIT_ENTANGLED_MODES}, got d={d}")
    ch = derive_channel(params)
    psi = entangled_basis(idx, params)
    partner = entangled_basis(shifted_index(idx, d), params)
    rp = 0.5j * ch.eta * (np.outer(partner, psi.conj()) - np.outer(psi, partner.conj()))
    return FockOperator(rp, (d, d))


# ---------------------------------------------------------------------------
# Case 3: coherent probe on a truncated two-mode Fock basis
# ---------------------------------------------------------------------------

def _noise_occupation(params: ChannelParams) -> float:
    return (1.0 - params.transmissivity) * params.noise_per_mode


def _displaced_thermal_z(z: complex, n_bar: float, cutoff: Cutoff) -> DensityMatrix:
    gp = GaussianModeParams.from_occupation(abs(z), n_bar, phase=float(np.angle(z)))
    return displaced_thermal(gp, cutoff)


def case3_lambda(params: ChannelParams, cutoff: Cutoff = DEFAULT_CUTOFF) -> DensityMatrix:
    """Dephased output state of the coherent probe: diagonal in the Fock basis.

    Product of the phase-averaged displaced thermal state in the up mode
    (displacement sqrt(T), occupation (1-T) b) and a thermal state with the
    same occupation in the down mode.
    """
    n_bar = _noise_occupation(params)
    up = phase_average(_displaced_thermal_z(
        math.sqrt(params.transmissivity), n_bar, cutoff))
    down = thermal_state(n_bar, cutoff)
    lam = np.kron(up.entries, down.entries)
    deficit = 1.0 - float(np.trace(lam).real)
    if deficit > 1e-8:
        raise TruncationError(f"combined truncation deficit {deficit:.3e} exceeds 1e-8")
    return DensityMatrix(lam, (cutoff.dim, cutoff.dim),
                         deficit=max(deficit, 0.0), check_positive=False)


def _case3_lambda_diag(params: ChannelParams, cutoff: Cutoff) -> np.ndarray:
    """Diagonal of case3_lambda as a vector, without the dense matrix."""
    n_bar = _noise_occupation(params)
    up = _displaced_thermal_z(math.sqrt(params.transmissivity), n_bar, cutoff)
    p_up = np.real(np.diag(up.entries))
    p_down = np.real(np.diag(thermal_state(n_bar, cutoff).entries))
    lam = np.kron(p_up, p_down)
    deficit = 1.0 - float(lam.sum())
    if deficit > 1e-8:
        raise TruncationError(f"combined truncation deficit {deficit:.3e} exceeds 1e-8")
    return lam


@dataclass(frozen=True)
class Case3Pipeline:
    """Intermediates of the square-root perturbation pipeline on the support."""

    support: np.ndarray        # retained basis indices, up-major ordering
    lam: np.ndarray            # their diagonal weights
    s_matrix: np.ndarray       # exchange generator restricted to the support
    a_matrix: np.ndarray       # first-order root correction
    b_matrix: np.ndarray       # second-order root correction
    value: float               # -8 Re Tr(b_matrix)


def _restricted_exchange(support: np.ndarray, dim: int) -> np.ndarray:
    """Exchange-generator block on the given basis indices (up-major)."""
    ups, downs = support // dim, support % dim
    position = {(u, w): i for i, (u, w) in enumerate(zip(ups, downs))}
    s = np.zeros((len(support), len(support)))
    for i, (u, w) in enumerate(zip(ups, downs)):
        j = position.get((u - 1, w + 1))
        if u >= 1 and w + 1 < dim and j is not None:
            elem = math.sqrt(u * (w + 1))
            s[i, j] = elem
            s[j, i] = elem
    return s


def _boundary_sums(support: np.ndarray, lam_full: np.ndarray, dim: int) -> np.ndarray:
    """sum_k S_ik^2 (lam_k - lam_i) over neighbours k outside the support."""
    in_support = np.zeros(lam_full.size, dtype=bool)
    in_support[support] = True
    sums = np.zeros(support.size)
    for i, idx in enumerate(support):
        u, w = divmod(int(idx), dim)
        lam_i = lam_full[idx]
        if u >= 1 and w + 1 < dim and not in_support[(u - 1) * dim + (w + 1)]:
            k = (u - 1) * dim + (w + 1)
            sums[i] += u * (w + 1) * (lam_full[k] - lam_i)
        if w >= 1 and u + 1 < dim and not in_support[(u + 1) * dim + (w - 1)]:
            k = (u + 1) * dim + (w - 1)
            sums[i] += (u + 1) * w * (lam_full[k] - lam_i)
    return sums


def case3_matrix_pipeline(params: ChannelParams, cutoff: Cutoff = DEFAULT_CUTOFF,
                          support_tol: float = CASE3_SUPPORT_TOL) -> Case3Pipeline:
    """Second-order expansion of sqrt(sqrt(L) rho(eps) sqrt(L)) for rotated L.

    With L diagonal and S the exchange generator, the first- and
    second-order corrections to the root are
        A_ij = P_ij / (l_i + l_j),        P = i sqrt(L)(S L - L S) sqrt(L),
        B_ij = (Q_ij - (A A)_ij) / (l_i + l_j),
        Q = (1/2) sqrt(L)(2 S L S - S^2 L - L S^2) sqrt(L),
    and the generator-parameter Fisher information is -8 Tr B.  Basis states
    whose weight falls below support_tol times the largest are dropped
    before the elementwise divisions; they carry truncation-tail noise that
    would otherwise be amplified.
    """
    if not 0.0 < support_tol <= 1e-6:
        raise ValueError("support_tol must lie in (0, 1e-6]")
    lam_full = _case3_lambda_diag(params, cutoff)
    support = np.where(lam_full >= support_tol * lam_full.max())[0]
    if support.size == 0:
        raise EmptySupportError("no basis states above the support threshold")
    lam = lam_full[support]
    s = _restricted_exchange(support, cutoff.dim)

    l_row, l_col = lam[:, None], lam[None, :]
    root = np.sqrt(l_row * l_col)
    denom = l_row + l_col
    p = 1j * root * (l_col - l_row) * s
    a = p / denom
    sls = (s * lam[None, :]) @ s
    s2 = s @ s
    q = 0.5 * root * (2.0 * sls - s2 * l_col - l_row * s2)
    # The k-sums inside Q's diagonal run over the whole basis: neighbours
    # that fell below the support threshold still enter through the exact
    # S_ik^2 (lam_k - lam_i) term (their coupling through A vanishes with
    # sqrt(lam_k), but this piece does not, and at b = 0 it carries the
    # entire value).
    q[np.diag_indices_from(q)] += lam * _boundary_sums(support, lam_full, cutoff.dim)
    b = (q - a @ a) / denom
    value = -8.0 * float(np.trace(b).real)
    if value < -1e-10:
        raise NumericalBreakdownError(
            f"matrix pipeline produced a negative value {value:.3e}")
    return Case3Pipeline(support=support, lam=lam, s_matrix=s, a_matrix=a,
                         b_matrix=b, value=max(value, 0.0))


def case3_qfi_matrix(params: ChannelParams, cutoff: Cutoff = DEFAULT_CUTOFF,
                     support_tol: float = CASE3_SUPPORT_TOL,
                     rel_tol: float = 1e-8, max_n: int = 48) -> QfiResult:
    """Generator-parameter Fisher information via the matrix pipeline.

    Standard convention (the fidelity limit defines it).  The cutoff is
    doubled until the value stabilises to rel_tol and the certificate is
    attached to the result.
    """
    value, cert = converge_cutoff(
        lambda c: case3_matrix_pipeline(params, c, support_tol).value,
        start=cutoff, rel_tol=rel_tol, max_n=max_n)
    return QfiResult(value=value, strategy="case3", convention=Convention.STANDARD,
                     cutoff_used=cert.cutoff_used.n_max, converged=cert.converged,
                     relative_change=cert.relative_change)


def _exchange_blocks(n_max: int):
    """Total-photon-number blocks of the exchange generator.

    Yields (indices, eigenvalues, eigenvectors) per block; indices are
    positions in the up-major two-mode basis.  S conserves the total
    occupation, so its exponential acts independently on each block.
    """
    dim = n_max + 1
    for total in range(2 * n_max + 1):
        lo, hi = max(0, total - n_max), min(total, n_max)
        ups = np.arange(lo, hi + 1)
        indices = ups * dim + (total - ups)
        size = len(ups)
        block = np.zeros((size, size))
        for pos in range(1, size):
            u = ups[pos]
            block[pos, pos - 1] = block[pos - 1, pos] = math.sqrt(u * (total - u + 1))
        w, v = np.linalg.eigh(block)
        yield indices, w, v


def case3_rotated_state(eps: float, params: ChannelParams,
                        cutoff: Cutoff) -> DensityMatrix:
    """The dephased coherent-probe state rotated by exp(i eps S).

    Assembled block by block in the total photon number; used as the family
    for the fidelity-limit evaluation.
    """
    lam = _case3_lambda_diag(params, cutoff)
    dim2 = cutoff.dim ** 2
    rho = np.zeros((dim2, dim2), dtype=complex)
    for indices, w, v in _exchange_blocks(cutoff.n_max):
        u = (v * np.exp(1j * eps * w)) @ v.conj().T
        block = (u * lam[indices][None, :]) @ u.conj().T
        rho[np.ix_(indices, indices)] = block
    deficit = 1.0 - float(np.trace(rho).real)
    return DensityMatrix(rho, (cutoff.dim, cutoff.dim),
                         deficit=max(deficit, 0.0), check_positive=False)


def _case3_trace_root(eps: float, lam: np.ndarray, n_max: int) -> float:
    """Tr sqrt(sqrt(L) rho(eps) sqrt(L)) for the rotated diagonal family.

    Equals the nuclear norm of sqrt(L) exp(-i eps S) sqrt(L), evaluated
    exactly block by block; no eigenvalue of a perturbed matrix is ever
    square-rooted, so the result stays accurate for the deep truncation
    tail.
    """
    total = 0.0
    for indices, w, v in _exchange_blocks(n_max):
        u_dag = (v * np.exp(-1j * eps * w)) @ v.conj().T
        root = np.sqrt(lam[indices])
        c = (root[:, None] * u_dag) * root[None, :]
        total += float(np.linalg.svd(c, compute_uv=False).sum())
    return total


def case3_qfi_fidelity(params: ChannelParams, cutoff: Cutoff = DEFAULT_CUTOFF,
                       eps_schedule: Sequence[float] = (4e-2, 2e-2, 1e-2),
                       rel_tol: float = 1e-8, max_n: int = 48,
                       extrapolation_tol: float = 1e-6) -> QfiResult:
    """Generator-parameter Fisher information via the fidelity limit.

    Delegates to the fidelity-quotient extrapolation of bures_qfi over the
    rotated family, with the trace of the root supplied in exact
    block-diagonal form.  The cutoff is doubled until the extrapolated
    value stabilises to rel_tol.
    """
    def at_cutoff(c: Cutoff) -> float:
        lam = _case3_lambda_diag(params, c)
        result = bures_qfi(
            rho_at=lambda th: case3_rotated_state(th, params, c),
            theta0=0.0, eps_schedule=eps_schedule, rel_tol=extrapolation_tol,
            trace_root_pair=lambda e: _case3_trace_root(e, lam, c.n_max),
            strategy="case3")
        return result.value

    value, cert = converge_cutoff(at_cutoff, start=cutoff, rel_tol=rel_tol, max_n=max_n)
    return QfiResult(value=value, strategy="case3", convention=Convention.STANDARD,
                     cutoff_used=cert.cutoff_used.n_max, converged=cert.converged,
                     relative_change=cert.relative_change)


def case3_rho_theta(theta: float, params: ChannelParams,
                    cutoff: Cutoff = DEFAULT_CUTOFF,
                    nodes: int | None = None) -> DensityMatrix:
    """Output state of the coherent probe at relative phase theta.

    Quadrature over the common phase xi of the product of displaced thermal
    states carrying phases xi + theta/2 and xi - theta/2 on the two arms,
    expressed in the up/down mode basis: the arm displacements
    sqrt(T/2) e^(i(xi +/- theta/2)) combine to sqrt(T) cos(theta/2) e^(i xi)
    on the up mode and i sqrt(T) sin(theta/2) e^(i xi) on the down mode.
    At theta = 0 this reproduces case3_lambda.
    """
    n_bar = _noise_occupation(params)
    delta = math.sqrt(params.transmissivity / 2.0)
    if nodes is None:
        nodes = quadrature_node_bound((cutoff.dim, cutoff.dim))

    def builder(xi: float) -> DensityMatrix:
        z_plus = delta * np.exp(1j * (xi + theta / 2.0))
        z_minus = delta * np.exp(1j * (xi - theta / 2.0))
        z_up = (z_plus + z_minus) / math.sqrt(2.0)
        z_down = (z_plus - z_minus) / math.sqrt(2.0)
        up = _displaced_thermal_z(z_up, n_bar, cutoff)
        down = _displaced_thermal_z(z_down, n_bar, cutoff)
        deficit = 1.0 - (1.0 - up.deficit) * (1.0 - down.deficit)
        return DensityMatrix(np.kron(up.entries, down.entries),
                             (cutoff.dim, cutoff.dim), deficit=deficit,
                             check_positive=False)

    return phase_average_quadrature(builder, nodes)


def case3_qfi(params: ChannelParams, cutoff: Cutoff = DEFAULT_CUTOFF,
              convention: Convention = Convention.PAPER, method: str = "matrix",
              support_tol: float = CASE3_SUPPORT_TOL, rel_tol: float = 1e-8,
              max_n: int = 48) -> QfiResult:
    """Per-trial Fisher information of the coherent probe, per unit phase.

    The numerical pipelines parameterise the rotation by the exchange
    generator, which advances the physical arm phase difference at rate
    PHASE_PER_GENERATOR_ANGLE; their output is rescaled accordingly so the
    value is directly comparable with case1_closed and case2_closed.
    """
    if method == "matrix":
        raw = case3_qfi_matrix(params, cutoff, support_tol, rel_tol, max_n)
    elif method == "fidelity":
        raw = case3_qfi_fidelity(params, cutoff, rel_tol=rel_tol, max_n=max_n)
    else:
        raise ValueError(f"unknown method {method!r}; use 'matrix' or 'fidelity'")
    value = raw.value / PHASE_PER_GENERATOR_ANGLE ** 2
    if convention is Convention.PAPER:
        value /= 2.0
    return QfiResult(value=value, strategy="case3", convention=convention,
                     cutoff_used=raw.cutoff_used, converged=raw.converged,
                     relative_change=raw.relative_change)


# ---------------------------------------------------------------------------
# Measurement helpers for the separable strategy
# ---------------------------------------------------------------------------

def case1_family(params: ChannelParams) -> Callable[[float], DensityMatrix]:
    """The phase-parameterised output-state family of the separable strategy."""
    return lambda theta: case1_rho(theta, params)


def case1_optimal_povm(params: ChannelParams) -> Povm:
    """Projectors onto (|up> +/- i |down>)/sqrt(2) plus the complement.

    This basis saturates the quantum bound for the separable strategy at
    theta = 0.
    """
    d = params.modes
    plus = np.zeros(d, dtype=complex)
    minus = np.zeros(d, dtype=complex)
    plus[0], plus[1] = 1.0 / math.sqrt(2.0), 1j / math.sqrt(2.0)
    minus[0], minus[1] = 1.0 / math.sqrt(2.0), -1j / math.sqrt(2.0)
    e_plus = np.outer(plus, plus.conj())
    e_minus = np.outer(minus, minus.conj())
    elements = [FockOperator(e_plus, (d,)), FockOperator(e_minus, (d,))]
    if d > 2:
        rest = np.eye(d) - e_plus - e_minus
        elements.append(FockOperator(rest, (d,)))
    return Povm(elements)
