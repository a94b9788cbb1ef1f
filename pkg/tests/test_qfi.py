import numpy as np
import pytest

from qiphase.fock import Cutoff, DensityMatrix, FockOperator
from qiphase.qfi import (
    Convention,
    DegenerateLikelihoodError,
    Povm,
    bures_qfi,
    classical_fisher,
    converge_cutoff,
    crb_montecarlo,
    sld_qfi,
)
from qiphase.strategies import (
    ChannelParams,
    case1_family,
    case1_optimal_povm,
    case1_qfi_per_photon,
    case1_rho,
    case1_rho_prime,
    derive_channel,
)


def unitary_family(rho0_entries, generator):
    gw, gv = np.linalg.eigh(generator)

    def family(theta):
        u = (gv * np.exp(1j * theta * gw)) @ gv.conj().T
        return DensityMatrix(u @ rho0_entries @ u.conj().T, check_positive=False)

    return family


def random_full_rank(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T + 0.1 * np.eye(dim)
    return rho / np.trace(rho).real


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def random_povm(dim, n_elements, rng):
    mats = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            for _ in range(n_elements)]
    gram = sum(m.conj().T @ m for m in mats)
    w, v = np.linalg.eigh(gram)
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    return Povm([FockOperator(inv_root @ m.conj().T @ m @ inv_root) for m in mats])


class TestSldQfi:
    def test_pure_state_oracle(self):
        # pure-state oracle: 4 Var_psi(generator) with variance 1/4
        rho0 = DensityMatrix(np.diag([1.0, 0.0]))
        rp = FockOperator(np.array([[0.0, -0.5j], [0.5j, 0.0]]))
        assert sld_qfi(rho0, rp, Convention.STANDARD).value == pytest.approx(1.0, abs=1e-14)
        assert sld_qfi(rho0, rp, Convention.PAPER).value == pytest.approx(0.5, abs=1e-14)

    def test_zero_derivative(self):
        rho0 = DensityMatrix(np.eye(3) / 3)
        assert sld_qfi(rho0, FockOperator(np.zeros((3, 3)))).value == 0.0

    def test_case1_pair_matches_closed_chain(self):
        params = ChannelParams(0.5, 1e-4, 4)
        got = sld_qfi(case1_rho(0.0, params), case1_rho_prime(params)).value
        assert got == pytest.approx(case1_qfi_per_photon(params), rel=1e-10)

    def test_standard_is_twice_paper(self):
        rng = np.random.default_rng(2)
        rho0 = DensityMatrix(random_full_rank(5, rng))
        g = random_hermitian(5, rng)
        rp = FockOperator(1j * (g @ rho0.entries - rho0.entries @ g))
        paper = sld_qfi(rho0, rp, Convention.PAPER).value
        standard = sld_qfi(rho0, rp, Convention.STANDARD).value
        assert standard == pytest.approx(2.0 * paper, rel=1e-15)

    def test_unitary_conjugation_invariance(self):
        rng = np.random.default_rng(8)
        rho0 = random_full_rank(4, rng)
        g = random_hermitian(4, rng)
        rp = 1j * (g @ rho0 - rho0 @ g)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        base = sld_qfi(DensityMatrix(rho0), FockOperator(rp)).value
        rotated = sld_qfi(DensityMatrix(q @ rho0 @ q.conj().T, check_positive=False),
                          FockOperator(q @ rp @ q.conj().T)).value
        assert rotated == pytest.approx(base, rel=1e-10)

    def test_rejects_nonhermitian_derivative(self):
        rho0 = DensityMatrix(np.eye(2) / 2)
        with pytest.raises(ValueError):
            sld_qfi(rho0, FockOperator([[0.0, 1.0], [0.0, 0.0]]))


class TestBuresQfi:
    def test_constant_family_is_zero(self):
        rho = DensityMatrix(np.diag([0.6, 0.3, 0.1]))
        result = bures_qfi(lambda theta: rho)
        assert result.value == pytest.approx(0.0, abs=1e-10)

    def test_pure_single_photon_family(self):
        family = case1_family(ChannelParams(1.0, 0.0, 2))
        assert bures_qfi(family).value == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_sld_on_random_families(self, seed):
        rng = np.random.default_rng(seed)
        rho0 = random_full_rank(4, rng)
        g = random_hermitian(4, rng)
        family = unitary_family(rho0, g)
        rp = FockOperator(1j * (g @ rho0 - rho0 @ g))
        want = sld_qfi(DensityMatrix(rho0), rp, Convention.STANDARD).value
        got = bures_qfi(family).value
        assert got == pytest.approx(want, rel=1e-6)

    def test_schedule_validation(self):
        rho = DensityMatrix(np.eye(2) / 2)
        with pytest.raises(ValueError):
            bures_qfi(lambda t: rho, eps_schedule=[1e-2, 2e-2, 4e-2])
        with pytest.raises(ValueError):
            bures_qfi(lambda t: rho, eps_schedule=[4e-2, 2e-2])
        with pytest.raises(ValueError):
            bures_qfi(lambda t: rho, eps_schedule=[0.5, 0.2, 0.1])

    def test_reports_extrapolation_spread(self):
        family = case1_family(ChannelParams(0.4, 1e-3, 2))
        result = bures_qfi(family)
        assert result.converged
        assert result.relative_change < 1e-6


class TestClassicalFisher:
    def test_stationary_basis_gives_zero(self):
        params = ChannelParams(0.3, 1e-4, 4)
        d = params.modes
        e_up = np.zeros((d, d), dtype=complex)
        e_up[0, 0] = 1.0
        e_down = np.zeros((d, d), dtype=complex)
        e_down[1, 1] = 1.0
        rest = np.eye(d) - e_up - e_down
        povm = Povm([FockOperator(e_up), FockOperator(e_down), FockOperator(rest)])
        cfi = classical_fisher(povm, case1_family(params), 0.0)
        assert cfi == pytest.approx(0.0, abs=1e-12)

    def test_optimal_basis_on_pure_family(self):
        params = ChannelParams(1.0, 0.0, 2)
        cfi = classical_fisher(case1_optimal_povm(params), case1_family(params), 0.0)
        assert cfi == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("seed", range(6))
    def test_bounded_by_quantum_fisher_information(self, seed):
        rng = np.random.default_rng(100 + seed)
        rho0 = random_full_rank(4, rng)
        g = random_hermitian(4, rng)
        family = unitary_family(rho0, g)
        rp = FockOperator(1j * (g @ rho0 - rho0 @ g))
        qfi = sld_qfi(DensityMatrix(rho0), rp, Convention.STANDARD).value
        povm = random_povm(4, rng.integers(2, 6), rng)
        cfi = classical_fisher(povm, family, 0.0)
        assert cfi <= qfi + 1e-8

    def test_step_validation(self):
        params = ChannelParams(0.5, 1e-4, 2)
        with pytest.raises(ValueError):
            classical_fisher(case1_optimal_povm(params), case1_family(params),
                             0.0, step=0.5)

    def test_dimension_mismatch(self):
        params = ChannelParams(0.5, 1e-4, 4)
        povm = case1_optimal_povm(ChannelParams(0.5, 1e-4, 2))
        with pytest.raises(ValueError):
            classical_fisher(povm, case1_family(params), 0.0)


class TestCrbMonteCarlo:
    def test_degenerate_likelihood_raises(self):
        params = ChannelParams(0.5, 1e-4, 2)
        flat = Povm([FockOperator(np.eye(2) / 2), FockOperator(np.eye(2) / 2)])
        with pytest.raises(DegenerateLikelihoodError):
            crb_montecarlo(flat, case1_family(params), 0.0, trials=10 ** 4, seed=1)

    def test_deterministic_given_seed(self):
        params = ChannelParams(0.1, 1e-4, 2)
        povm = case1_optimal_povm(params)
        family = case1_family(params)
        a = crb_montecarlo(povm, family, 0.0, trials=2000, seed=5, repeats=50)
        b = crb_montecarlo(povm, family, 0.0, trials=2000, seed=5, repeats=50)
        c = crb_montecarlo(povm, family, 0.0, trials=2000, seed=6, repeats=50)
        assert a == b
        assert a[0] != c[0]

    def test_trials_floor(self):
        params = ChannelParams(0.1, 1e-4, 2)
        with pytest.raises(ValueError):
            crb_montecarlo(case1_optimal_povm(params), case1_family(params),
                           0.0, trials=100, seed=1)

    def test_doubling_trials_halves_variance(self):
        params = ChannelParams(0.1, 1e-4, 2)
        povm = case1_optimal_povm(params)
        family = case1_family(params)
        var1, _ = crb_montecarlo(povm, family, 0.0, trials=20000, seed=11,
                                 repeats=1200)
        var2, _ = crb_montecarlo(povm, family, 0.0, trials=40000, seed=12,
                                 repeats=1200)
        assert var1 / var2 == pytest.approx(2.0, rel=0.15)


class TestConvergeCutoff:
    def test_constant_converges_at_first_doubling(self):
        value, cert = converge_cutoff(lambda c: 3.5, Cutoff(4), rel_tol=1e-8)
        assert value == 3.5
        assert cert.converged
        assert cert.relative_change == 0.0
        assert cert.cutoff_used.n_max == 8

    def test_oscillating_reports_failure(self):
        # flips sign at every doubling, so the relative change never settles
        value, cert = converge_cutoff(lambda c: (-1.0) ** c.n_max.bit_length(),
                                      Cutoff(2), rel_tol=1e-8, max_n=32)
        assert not cert.converged

    def test_zero_function(self):
        value, cert = converge_cutoff(lambda c: 0.0, Cutoff(2), rel_tol=1e-8)
        assert value == 0.0
        assert cert.converged

    def test_budget_too_small_to_double(self):
        value, cert = converge_cutoff(lambda c: 1.0, Cutoff(30), rel_tol=1e-8,
                                      max_n=48)
        assert not cert.converged
        assert cert.cutoff_used.n_max == 30


class TestPovm:
    def test_rejects_incomplete(self):
        with pytest.raises(ValueError):
            Povm([FockOperator(np.eye(2) / 2)])

    def test_rejects_negative_element(self):
        with pytest.raises(ValueError):
            Povm([FockOperator(np.diag([1.5, 0.5])), FockOperator(np.diag([-0.5, 0.5]))])

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(55)
        povm = random_povm(4, 3, rng)
        rho = DensityMatrix(random_full_rank(4, rng))
        assert povm.probabilities(rho).sum() == pytest.approx(1.0, abs=1e-10)
