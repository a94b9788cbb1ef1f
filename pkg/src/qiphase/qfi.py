"""Fisher-information machinery on finite-dimensional states.

Quantum Fisher information is computed two independent ways: from the
symmetric-logarithmic-derivative eigenbasis sum, and from the small-parameter
limit of the Uhlmann fidelity.  Classical Fisher information and a
Monte-Carlo Cramer-Rao harness check that the quantum bound is attainable.

Two normalisation conventions coexist: the `paper` convention defines the
superoperator sum as sum_ij |A_ij|^2 / (b_i + b_j), while the `standard`
convention carries the conventional factor two that makes the value agree
with the fidelity-limit definition.  `standard` is always exactly twice
`paper` for the SLD engine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fock import Cutoff, DensityMatrix, FockOperator, hermitian_eig, psd_sqrt

SLD_SUPPORT_TOL = 1e-12
DEFAULT_EPS_SCHEDULE = (4e-2, 2e-2, 1e-2)
PROB_FLOOR = 1e-12


class DegenerateLikelihoodError(ValueError):
    """All outcome probabilities are flat in the parameter; nothing to estimate."""


class ExtrapolationError(RuntimeError):
    """The fidelity quotient sequence is not monotone beyond roundoff."""


class NumericalBreakdownError(RuntimeError):
    """A quantity that must be nonnegative came out significantly negative."""


class Convention(str, enum.Enum):
    PAPER = "paper"
    STANDARD = "standard"

    @classmethod
    def parse(cls, text: str) -> "Convention":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown convention {text!r}; use 'paper' or 'standard'")


@dataclass(frozen=True)
class QfiResult:
    """A Fisher-information value with its provenance and convergence state."""

    value: float
    strategy: str
    convention: Convention
    cutoff_used: int | None = None
    converged: bool = True
    relative_change: float = 0.0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"Fisher information must be >= 0, got {self.value}")


@dataclass(frozen=True)
class ConvergenceCertificate:
    converged: bool
    relative_change: float
    cutoff_used: Cutoff


class Povm:
    """A positive operator-valued measure: PSD elements summing to identity."""

    def __init__(self, elements: Sequence[FockOperator]):
        if not elements:
            raise ValueError("a POVM needs at least one element")
        dim = elements[0].dim
        total = np.zeros((dim, dim), dtype=complex)
        for e in elements:
            if e.dim != dim:
                raise ValueError("POVM elements must share one dimension")
            low = float(np.linalg.eigvalsh(0.5 * (e.entries + e.entries.conj().T))[0])
            if low < -1e-10:
                raise ValueError(f"POVM element has negative eigenvalue {low:.2e}")
            total += e.entries
        if np.max(np.abs(total - np.eye(dim))) > 1e-10:
            raise ValueError("POVM elements do not sum to the identity within 1e-10")
        self.elements = tuple(elements)
        self.dim = dim

    def probabilities(self, rho: DensityMatrix) -> np.ndarray:
        if rho.dim != self.dim:
            raise ValueError(f"state dim {rho.dim} does not match POVM dim {self.dim}")
        p = np.array([np.trace(e.entries @ rho.entries).real for e in self.elements])
        return np.clip(p, 0.0, None)


def _clamp_nonneg(value: float, what: str) -> float:
    if value < -1e-10:
        raise NumericalBreakdownError(f"{what} came out negative: {value:.3e}")
    return max(value, 0.0)


def sld_qfi(rho0: DensityMatrix, rho_prime: FockOperator,
            convention: Convention = Convention.PAPER,
            support_tol: float = SLD_SUPPORT_TOL,
            strategy: str = "generic",
            cutoff_used: int | None = None) -> QfiResult:
    """Fisher information from the eigenbasis sum over the state derivative.

    Diagonalises rho0 as sum_i b_i |e_i><e_i| and accumulates
    |<e_i|rho'|e_j>|^2 / (b_i + b_j); the `standard` convention doubles the
    sum.  Pairs whose eigenvalue sum falls below support_tol * max(b) are
    truncation-tail noise and are dropped.
    """
    if rho0.dim != rho_prime.dim:
        raise ValueError("state and derivative dimensions differ")
    if rho_prime.hermiticity_defect() > 1e-10:
        raise ValueError("the state derivative must be Hermitian")
    betas, v = hermitian_eig(rho0)
    betas = np.clip(betas, 0.0, None)
    if betas[0] <= 0.0:
        raise ValueError("state has empty support")
    a = v.conj().T @ rho_prime.entries @ v
    denom = betas[:, None] + betas[None, :]
    keep = denom >= support_tol * betas[0]
    total = float(np.sum((np.abs(a) ** 2)[keep] / denom[keep]))
    if convention is Convention.STANDARD:
        total *= 2.0
    return QfiResult(value=_clamp_nonneg(total, "SLD Fisher information"),
                     strategy=strategy, convention=convention,
                     cutoff_used=cutoff_used)


def _richardson_in_eps_squared(eps: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """Neville extrapolation of q(eps) to eps -> 0 assuming only even powers.

    Returns the final tableau value and the relative spread against the
    previous extrapolation level.
    """
    x = eps ** 2
    tableau = [list(q)]
    for level in range(1, len(q)):
        prev = tableau[-1]
        row = []
        for i in range(len(prev) - 1):
            xi, xj = x[i], x[i + level]
            row.append((xi * prev[i + 1] - xj * prev[i]) / (xi - xj))
        tableau.append(row)
    final = tableau[-1][0]
    prev_level = tableau[-2][0] if len(tableau) >= 2 else final
    spread = abs(final - prev_level) / max(abs(final), 1e-300)
    return float(final), float(spread)


def bures_qfi(rho_at: Callable[[float], DensityMatrix], theta0: float = 0.0,
              eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
              rel_tol: float = 1e-6,
              trace_root_pair: Callable[[float], float] | None = None,
              strategy: str = "generic",
              cutoff_used: int | None = None) -> QfiResult:
    """Fisher information from the fidelity limit 8 (1 - Tr sqrt(...)) / eps^2.

    Evaluates the quotient at each epsilon in the (decreasing) schedule and
    Richardson-extrapolates to zero; the residual spread between the last
    two extrapolation levels is reported as relative_change.  Tr sqrt is
    computed as the nuclear norm of sqrt(rho(theta0+eps)) sqrt(rho(theta0));
    families with an analytically known root structure can supply
    `trace_root_pair(eps)` to evaluate it exactly.

    Always reports in the standard convention, which the limit defines.
    """
    eps = np.asarray(list(eps_schedule), dtype=float)
    if len(eps) < 3:
        raise ValueError("need at least 3 epsilon values")
    if np.any(eps <= 0) or np.any(eps > 0.1):
        raise ValueError("epsilon values must lie in (0, 0.1]")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("epsilon schedule must be strictly decreasing")

    if trace_root_pair is None:
        root0 = psd_sqrt(rho_at(theta0))

        def trace_root_pair(e: float) -> float:
            root_e = psd_sqrt(rho_at(theta0 + e))
            return float(np.linalg.svd(root_e.entries @ root0.entries,
                                       compute_uv=False).sum())

    quotients = [8.0 * (1.0 - trace_root_pair(float(e))) / e ** 2 for e in eps]
    q = np.asarray(quotients)

    diffs = np.diff(q)
    floor = 1e-9 * max(1.0, float(np.max(np.abs(q))))
    if np.any(diffs > floor) and np.any(diffs < -floor):
        raise ExtrapolationError(
            f"fidelity quotient sequence is not monotone beyond {floor:.1e}: {q.tolist()}")

    value, spread = _richardson_in_eps_squared(eps, q)
    return QfiResult(value=_clamp_nonneg(value, "fidelity-limit Fisher information"),
                     strategy=strategy, convention=Convention.STANDARD,
                     cutoff_used=cutoff_used, converged=spread <= rel_tol,
                     relative_change=spread)


def classical_fisher(povm: Povm, rho_at: Callable[[float], DensityMatrix],
                     theta0: float, step: float = 1e-5) -> float:
    """Fisher information of the POVM's outcome distribution at theta0.

    Central finite differences of p_o(theta) = Tr(rho(theta) E_o); outcomes
    with probability below PROB_FLOOR are skipped.
    """
    if not (1e-7 <= step <= 1e-2):
        raise ValueError("finite-difference step must lie in [1e-7, 1e-2]")
    p0 = povm.probabilities(rho_at(theta0))
    plus = povm.probabilities(rho_at(theta0 + step))
    minus = povm.probabilities(rho_at(theta0 - step))
    deriv = (plus - minus) / (2.0 * step)
    keep = p0 >= PROB_FLOOR
    return float(np.sum(deriv[keep] ** 2 / p0[keep]))


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    safe = np.clip(probs, 1e-300, None)
    return counts @ np.log(safe)


def crb_montecarlo(povm: Povm, rho_at: Callable[[float], DensityMatrix],
                   theta_true: float, trials: int, seed: int,
                   repeats: int = 2000, grid_points: int = 512) -> tuple[float, float]:
    """Empirical variance of the maximum-likelihood phase estimate vs the bound.

    Repeats the experiment `repeats` times: each run draws `trials` i.i.d.
    outcomes at theta_true, maximises the multinomial likelihood on a grid
    over [-pi/2, pi/2] and refines the peak by golden-section search.
    Returns (variance across runs, 1 / (trials * CFI)).  Fully deterministic
    for a given seed; the variance uses numpy's two-pass formula so it does
    not depend on reduction order.
    """
    if trials < 1000:
        raise ValueError("need at least 10^3 trials per experiment")
    grid = np.linspace(-np.pi / 2, np.pi / 2, grid_points)
    prob_table = np.stack([povm.probabilities(rho_at(t)) for t in grid], axis=1)
    swing = prob_table.max(axis=1) - prob_table.min(axis=1)
    if float(swing.max()) < PROB_FLOOR:
        raise DegenerateLikelihoodError(
            "outcome probabilities do not depend on the phase over the search range")

    p_true = povm.probabilities(rho_at(theta_true))
    p_true = p_true / p_true.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(trials, p_true, size=repeats).astype(float)

    loglik = counts @ np.log(np.clip(prob_table, 1e-300, None))
    best = np.argmax(loglik, axis=1)
    lo = grid[np.maximum(best - 1, 0)]
    hi = grid[np.minimum(best + 1, grid_points - 1)]

    estimates = np.empty(repeats)
    for i in range(repeats):
        estimates[i] = _golden_section_max(
            lambda t, c=counts[i]: float(_log_likelihood(c, povm.probabilities(rho_at(t)))),
            lo[i], hi[i])

    variance = float(np.var(estimates, ddof=1))
    cfi = classical_fisher(povm, rho_at, theta_true)
    if cfi <= 0:
        raise DegenerateLikelihoodError("classical Fisher information vanished at theta_true")
    return variance, 1.0 / (trials * cfi)


def _golden_section_max(f: Callable[[float], float], a: float, b: float,
                        tol: float = 1e-10) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def converge_cutoff(compute: Callable[[Cutoff], float], start: Cutoff,
                    rel_tol: float = 1e-8, max_n: int = 48) -> tuple[float, ConvergenceCertificate]:
    """Double n_max until the computed value stabilises to rel_tol.

    Stops when |f(2N) - f(N)| / |f(2N)| drops below rel_tol or the doubled
    cutoff would exceed max_n; running out of budget is reported through the
    certificate (converged=False), not raised.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    n = start.n_max
    value = compute(Cutoff(n))
    converged = False
    rel_change = math.inf
    while 2 * n <= max_n:
        nxt = compute(Cutoff(2 * n))
        if nxt == value:
            rel_change = 0.0
        elif nxt != 0.0:
            rel_change = abs(nxt - value) / abs(nxt)
        else:
            rel_change = math.inf
        n, value = 2 * n, nxt
        if rel_change < rel_tol:
            converged = True
            break
    return value, ConvergenceCertificate(converged=converged,
                                         relative_change=rel_change,
                                         cutoff_used=Cutoff(n))
