"""Acceptance gate: one test per exit criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines alongside the measured numbers.
"""

import functools
import itertools
import math

import numpy as np
import pytest

from qiphase.cli import main as cli_main
from qiphase.fock import Cutoff, DensityMatrix, FockOperator, phase_average
from qiphase.qfi import (
    Convention,
    Povm,
    bures_qfi,
    classical_fisher,
    converge_cutoff,
    crb_montecarlo,
    sld_qfi,
)
from qiphase import strategies
from qiphase.strategies import ChannelParams, EntangledBasisIndex
from qiphase.sweep import SweepSpec, crossover_report, run_sweep


def report(name: str, detail: str) -> None:
    print(f"PASS: {name} -- {detail}", flush=True)


@functools.lru_cache(maxsize=1)
def default_grid_rows():
    return tuple(run_sweep(SweepSpec()))


def random_density(dim, rng, rank=None):
    m = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


class TestAcceptance:
    def test_lossless_limit(self):
        """case1/case2 at T=1, b=0 give 1/2 (paper) and 1 (standard); the
        fidelity limit on the explicit pure family agrees within 1e-4."""
        params = ChannelParams(1.0, 0.0, 2)
        assert strategies.case1_closed(params, Convention.PAPER).value == 0.5
        assert strategies.case2_closed(params, Convention.PAPER).value == 0.5
        assert strategies.case1_closed(params, Convention.STANDARD).value == 1.0
        assert strategies.case2_closed(params, Convention.STANDARD).value == 1.0
        bures = bures_qfi(strategies.case1_family(params)).value
        assert bures == pytest.approx(1.0, abs=1e-4)
        report("lossless limit", f"paper 0.5 / standard 1.0, fidelity limit {bures:.8f}")

    def test_sld_matches_closed_forms(self):
        """SLD on the explicit output matrices reproduces both closed-form
        chains within 1e-8 relative across the (T, b, d) grid."""
        worst = 0.0
        for t, b, d in itertools.product((0.5, 0.1, 0.01), (1e-3, 1e-4), (2, 4, 6, 8)):
            params = ChannelParams(t, b, d)
            p = strategies.derive_channel(params).detect_prob
            got1 = p * sld_qfi(strategies.case1_rho(0.0, params),
                               strategies.case1_rho_prime(params)).value
            want1 = strategies.case1_closed(params).value
            got2 = p * sld_qfi(strategies.case2_rho(0.0, params),
                               strategies.case2_rho_prime(params)).value
            want2 = strategies.case2_closed(params).value
            worst = max(worst, abs(got1 - want1) / want1, abs(got2 - want2) / want2)
        assert worst < 1e-8
        report("SLD vs closed-form chains", f"max rel deviation {worst:.2e} < 1e-8")

    def test_coherent_three_way_oracle(self):
        """Matrix pipeline, fidelity limit and the quadrature-family fidelity
        agree pairwise within 1e-4 relative on the 3x3 (T, b) grid; both
        certified pipelines converge at rel_tol 1e-8 within n_max <= 48, and
        the quadrature-family oracle is evaluated at the certified cutoff
        with a converged extrapolation."""
        worst = 0.0
        for t, b in itertools.product((1e-3, 1e-2, 1e-1), (1e-5, 1e-4, 1e-3)):
            params = ChannelParams(t, b, 2)
            r_matrix = strategies.case3_qfi_matrix(params, Cutoff(8),
                                                   rel_tol=1e-8, max_n=48)
            r_fid = strategies.case3_qfi_fidelity(params, Cutoff(8),
                                                  rel_tol=1e-8, max_n=48)
            assert r_matrix.converged and r_matrix.cutoff_used <= 48
            assert r_fid.converged and r_fid.cutoff_used <= 48
            # the quadrature family carries the physical phase, which runs at
            # twice the generator angle used by the other two pipelines
            cut = Cutoff(r_matrix.cutoff_used)
            r_quad = bures_qfi(
                lambda e: strategies.case3_rho_theta(2.0 * e, params, cut))
            assert r_quad.converged
            vals = (r_matrix.value, r_fid.value, r_quad.value)
            for x, y in itertools.combinations(vals, 2):
                worst = max(worst, abs(x - y) / max(abs(x), abs(y)))
        assert worst < 1e-4
        report("coherent three-way oracle",
               f"max pairwise rel deviation {worst:.2e} < 1e-4, pipelines "
               "certified at 1e-8 within n_max 48")

    def test_crossover_default_grid(self):
        """On the default grid a finite smallest even d* with iq2 > iq3 exists
        for every T and the ordering holds for all larger d.  The measured d*
        is reported against the expected value 6; a difference is a
        documented discrepancy, not a failure."""
        records = crossover_report(list(default_grid_rows()))
        assert len(records) == 3
        details = []
        for rec in sorted(records, key=lambda r: -r.T):
            assert rec.d_star is not None, f"no crossover for T={rec.T}"
            assert rec.holds_beyond, f"ordering not monotone beyond d* for T={rec.T}"
            note = "matches" if rec.d_star == 6 else "documented discrepancy vs"
            details.append(f"T={rec.T:g}: d*={rec.d_star} ({note} expected 6)")
        report("crossover on the default grid", "; ".join(details))

    def test_entangled_asymptote(self):
        """iq2 at d = 10^6 is within 1% of T/2; the iq2/iq3 ratio never
        decreases with d and its large-d value grows as T shrinks."""
        for t in (1e-1, 1e-2, 1e-3):
            val = strategies.case2_closed(ChannelParams(t, 1e-4, 10 ** 6)).value
            assert val == pytest.approx(t / 2.0, rel=1e-2)
        rows = default_grid_rows()
        tail_ratios = {}
        for t in (1e-1, 1e-2, 1e-3):
            series = [r.ratio_2_over_3 for r in rows if r.T == t]
            assert all(x <= y for x, y in zip(series, series[1:]))
            tail_ratios[t] = series[-1]
        assert tail_ratios[1e-1] < tail_ratios[1e-2] < tail_ratios[1e-3]
        report("entangled asymptote",
               f"iq2(10^6) ~ T/2; tail ratios {tail_ratios[1e-1]:.4f} < "
               f"{tail_ratios[1e-2]:.4f} < {tail_ratios[1e-3]:.4f}")

    def test_cramer_rao_montecarlo(self):
        """The maximum-likelihood estimator over 10^5 trials with the optimal
        measurement sits within 10% of the Cramer-Rao prediction and never
        undercuts 0.9 of it."""
        params = ChannelParams(0.1, 1e-4, 2)
        variance, bound = crb_montecarlo(
            strategies.case1_optimal_povm(params), strategies.case1_family(params),
            theta_true=0.0, trials=10 ** 5, seed=20230817)
        ratio = variance / bound
        assert 0.9 <= ratio <= 1.1
        report("Cramer-Rao Monte Carlo",
               f"variance/bound = {ratio:.4f} in [0.9, 1.1] over 10^5 trials")

    def test_property_suites(self):
        """Dephasing projector laws, channel identities, the rotation
        identity, the traceless first-order correction, and the classical
        bound against 100 randomized measurements."""
        rng = np.random.default_rng(424242)

        # dephasing: idempotence, trace, positivity, untouched diagonals
        for _ in range(5):
            rho = DensityMatrix(random_density(16, rng), (4, 4))
            out = phase_average(rho)
            np.testing.assert_array_equal(out.entries, phase_average(out).entries)
            np.testing.assert_array_equal(np.diag(out.entries), np.diag(rho.entries))
            assert out.trace().real == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.eigvalsh(out.entries)[0] >= -1e-10

        # eta * p = T and the b/d metamorphic identity
        for t, b, d in itertools.product((1e-3, 0.2, 0.9), (0.0, 1e-4, 1e-2),
                                         (2, 8, 100)):
            ch = strategies.derive_channel(ChannelParams(t, b, d))
            assert abs(ch.eta * ch.detect_prob - t) <= 1e-15
            if b > 0:
                assert (strategies.case2_closed(ChannelParams(t, b, d)).value
                        == strategies.case1_closed(ChannelParams(t, b / d, d)).value)

        # entangled rotation identity for d in {2, 4, 6}
        theta = 1.234
        for d in (2, 4, 6):
            params = ChannelParams(0.5, 1e-4, d)
            u = strategies.entangled_rotation(theta, params).entries
            for k in range(1, d + 1):
                for m in range(1, d + 1):
                    idx = EntangledBasisIndex(k, m)
                    got = u @ strategies.entangled_basis(idx, params)
                    want = (math.cos(theta / 2) * strategies.entangled_basis(idx, params)
                            + 1j * math.sin(theta / 2) * strategies.entangled_basis(
                                strategies.shifted_index(idx, d), params))
                    assert np.max(np.abs(got - want)) < 1e-12

        # traceless first-order correction in the coherent pipeline
        pipe = strategies.case3_matrix_pipeline(ChannelParams(0.1, 1e-4, 2), Cutoff(16))
        assert abs(np.trace(pipe.a_matrix)) == 0.0
        assert np.max(np.abs(np.diag(pipe.a_matrix))) == 0.0

        # classical Fisher information never beats the quantum value
        violations = 0
        for _ in range(100):
            dim = 4
            rho0 = random_density(dim, rng)
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            g = 0.5 * (g + g.conj().T)
            gw, gv = np.linalg.eigh(g)

            def family(th, gw=gw, gv=gv, rho0=rho0):
                u = (gv * np.exp(1j * th * gw)) @ gv.conj().T
                return DensityMatrix(u @ rho0 @ u.conj().T, check_positive=False)

            qfi = sld_qfi(DensityMatrix(rho0),
                          FockOperator(1j * (g @ rho0 - rho0 @ g)),
                          Convention.STANDARD).value
            mats = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
                    for _ in range(int(rng.integers(2, 6)))]
            gram = sum(m.conj().T @ m for m in mats)
            w, v = np.linalg.eigh(gram)
            inv_root = (v / np.sqrt(w)) @ v.conj().T
            povm = Povm([FockOperator(inv_root @ m.conj().T @ m @ inv_root)
                         for m in mats])
            if classical_fisher(povm, family, 0.0) > qfi + 1e-8:
                violations += 1
        assert violations == 0
        report("property suites",
               "dephasing laws, channel identities, rotation identity, "
               "traceless correction, CFI <= QFI on 100 random measurements")

    def test_sweep_determinism(self, tmp_path):
        """Two sweeps with identical config and seed write byte-identical CSV."""
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (out1, out2):
            code = cli_main(["sweep", "--config", "configs/fig2.toml",
                             "--out", str(out), "--seed", "20230817"])
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        report("sweep determinism",
               f"byte-identical CSV, {len(out1.read_bytes())} bytes")
