"""Acceptance criteria, one test class per criterion.

Run ``pytest tests/test_acceptance.py`` for the pass/fail summary printed at
the end of the session.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from flyingcat import feasibility as fz
from flyingcat import netstates as ns
from flyingcat import teleport as tp
from flyingcat.cli import main
from flyingcat.montecarlo import mc_vs_exact
from flyingcat.paritycheck import (
    ParityCheckConfig,
    channel_equivalence_error,
    check_blocks,
    error_budget,
    joint_closed_form,
    optimize_alpha,
    outcome_density,
    run_check_exact,
    thresholded_inference,
    total_error,
)
from flyingcat.qcore import dm, haar_states, ket
from oracles import loss_mode_oracle

XI_PLUS = (ket("000") + ket("011") + ket("101") + ket("110")) / 2


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.2f} s, limit {seconds} s"


def random_mixed(rng, n=3, rank=3):
    vs = haar_states(n, rank, rng)
    w = rng.dirichlet(np.ones(rank))
    return sum(p * np.outer(v, v.conj()) for p, v in zip(w, vs))


@pytest.mark.criterion(1, "channel equivalence")
class TestChannelEquivalence:
    def test_random_inputs(self):
        rng = np.random.default_rng(101)
        worst = 0.0
        with budget(5):
            for i in range(100):
                cfg = ParityCheckConfig(rng.uniform(0.2, 2.0), tuple(rng.uniform(0, 0.1, 3)), "ZX"[i % 2])
                rho = random_mixed(rng)
                worst = max(worst, channel_equivalence_error(rho, cfg, operators="tail"),
                            channel_equivalence_error(rho, cfg, operators="prefix"))
        assert worst < 1e-12

    def test_blocks_against_loss_modes(self):
        rng = np.random.default_rng(102)
        with budget(5):
            for _ in range(100):
                cfg = ParityCheckConfig(rng.uniform(0.2, 2.0), tuple(rng.uniform(0, 0.1, 3)))
                rho = random_mixed(rng)
                total = sum(run_check_exact(rho, cfg).blocks.values())
                assert_allclose(total, loss_mode_oracle(rho, cfg.alpha, cfg.etas), atol=1e-12)


@pytest.mark.criterion(2, "measurement-error closed form")
class TestMeasurementError:
    @pytest.mark.parametrize("abar", [0.1, 0.5, 1.0, 2.0])
    def test_half_line(self, abar):
        with budget(1):
            pre = check_blocks(dm(XI_PLUS), ParityCheckConfig(abar, (0.0, 0.0, 0.0)))
            assert pre.abar == pytest.approx(abar)
            val, _ = integrate.quad(lambda x: float(outcome_density(pre, x)), -np.inf, 0.0,
                                    epsabs=1e-13, epsrel=1e-12)
            pm = thresholded_inference(pre).pM
        ref = 0.5 * math.erfc(math.sqrt(2) * abar)
        assert abs(val - ref) < 1e-8
        assert abs(pm - ref) < 1e-8


@pytest.mark.criterion(3, "trade-off interior minimum")
class TestTradeoff:
    @pytest.mark.parametrize("eta", [0.005, 0.01, 0.02])
    def test_unique_minimum_and_optimizer(self, eta):
        etas = (eta,) * 3
        with budget(5):
            grid = np.arange(1e-4, 4.0, 1e-4)
            vals = np.array([total_error(a, etas) for a in grid])
            a_opt, _ = optimize_alpha(etas)
        i = int(np.argmin(vals))
        assert 0 < i < len(grid) - 1
        slope = np.sign(np.diff(vals))
        # strictly decreasing then strictly increasing
        assert np.all(slope[:i] < 0) and np.all(slope[i:] > 0)
        assert abs(a_opt - grid[i]) < 1e-3


@pytest.mark.criterion(4, "Monte Carlo vs exact")
class TestMonteCarlo:
    @pytest.mark.parametrize("label", ["xi_plus", "haar"])
    def test_post_selected_and_joint(self, label):
        cfg = ParityCheckConfig(1.0, (0.02, 0.02, 0.02))
        psi = XI_PLUS if label == "xi_plus" else haar_states(3, 1, np.random.default_rng(7))[0]
        with budget(30):
            rep = mc_vs_exact(cfg, psi, 100_000, seed=0)
        assert rep.max_sigma < 3
        assert rep.weights_sigma < 3
        assert rep.joint_sigma < 3

    def test_joint_table_closed_form(self):
        cfg = ParityCheckConfig(1.0, (0.02, 0.02, 0.02))
        exact = thresholded_inference(check_blocks(dm(XI_PLUS), cfg))
        closed = joint_closed_form({1: 1.0, -1: 0.0}, cfg.abar)
        for key, v in closed.items():
            assert exact.joint[key] == pytest.approx(v, abs=1e-10)


@pytest.mark.criterion(5, "decoder exhaustion")
class TestDecoderExhaustion:
    def test_all_patterns(self):
        with budget(10):
            rep = ns.decoder_exhaustion()
        assert (rep["X"][0], rep["Z"][0], rep["XZ"][0]) == (64, 64, 4096)
        for kind, (_, worst) in rep.items():
            assert abs(worst - 1) < 1e-9, kind


@pytest.mark.criterion(6, "witness endpoints")
class TestWitnessEndpoints:
    def test_random_guessing(self):
        f, _ = ns.tetra_fidelity(ns.tetra_configs(0.0, (0.0, 0.0, 0.0)))
        assert f == pytest.approx(1 / 64, abs=1e-12)

    def test_lossless(self):
        f, _ = ns.tetra_fidelity(ns.tetra_configs(6.0, (0.0, 0.0, 0.0)))
        assert abs(f - 1) < 1e-9

    @pytest.mark.parametrize("alpha, eta", [(1.5, 0.005), (1.0, 0.01), (2.0, 0.002), (1.8, 0.003)])
    def test_model_second_order(self, alpha, eta):
        b = error_budget(alpha, (eta,) * 3)
        s = b.p1 + b.p2 + b.pM
        assert s <= 0.05
        rho, _ = ns.tetra_prepare(ns.tetra_configs(alpha, (eta,) * 3))
        gap = abs(ns.witness_expectation(rho).value - ns.witness_noisy_model(b.pM, b.p1, b.p2))
        assert gap < 5 * s ** 2

    def test_threshold(self):
        with budget(60):
            _, f05 = ns.optimize_tetra_alpha(0.05)
            _, f20 = ns.optimize_tetra_alpha(0.2)
        assert f05 > 0.5
        assert f20 < 0.5


@pytest.mark.criterion(7, "teleportation")
class TestTeleportation:
    def test_cooperative(self):
        rng = np.random.default_rng(70)
        for _ in range(20):
            f = tp.cooperative_fidelities(tp.TwoQubitMessage.haar(rng))
            assert np.all(np.abs(f - 1) < 1e-9)

    def test_average_without_cooperation(self):
        with budget(60):
            fbar, se = tp.average_fidelity(100_000, np.random.default_rng(71))
        assert abs(fbar - 0.4) < 3 * se


@pytest.mark.criterion(8, "feasibility numbers")
class TestFeasibility:
    def test_reference_set(self):
        with budget(5):
            b = fz.infidelity_budget(fz.reference_params())
        assert b.bandwidth_term == pytest.approx(0.046, rel=0.05)
        assert b.eps_qubit == pytest.approx(0.083, rel=0.01)
        print(f"internal-loss term {b.internal_term:.4f} (quoted {fz.QUOTED['internal_term']})")

    def test_doubled_chi(self):
        p = fz.reference_params()
        bw, _ = fz.closed_form_terms(fz.reference_params(chi=2 * p.chi))
        assert bw == pytest.approx(0.0115, rel=0.05)

    def test_validity_grid(self):
        chi0 = fz.linear_to_angular(1.05e6)
        worst = 0.0
        with budget(5):
            for sign in (1, -1):
                for kr in (0.0, 0.02, 0.05, 0.1):
                    for tc in (5.0, 8.0, 15.0, 30.0):
                        p = fz.CqedParams(chi=sign * chi0, kappa_int=kr * chi0, tau=tc / chi0, T2star=1.0)
                        num = fz.reflect_infidelity(p)
                        worst = max(worst, abs(sum(fz.closed_form_terms(p)) - num) / num)
        assert worst < 0.2


@pytest.mark.criterion(9, "CLI determinism")
class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["check", "--set", "mode=sampled", "--shots", "50000"],
        ["ghz", "--set", "mode=sampled", "--shots", "50000"],
        ["tetra-prepare", "--set", "mode=sampled", "--shots", "5000"],
        ["teleport", "--shots", "20000", "--set", "cooperative_messages=2"],
    ])
    def test_byte_identical(self, argv, capsys):
        outs = []
        with budget(30):
            for workers in ("1", "1", "4"):
                assert main(argv + ["--seed", "2024", "--workers", workers]) == 0
                outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1] == outs[2]
        assert len(outs[0].splitlines()) >= 3

