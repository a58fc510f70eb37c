"""Tests for the trajectory engine and the exact enumeration oracle."""

import math

import numpy as np
import pytest

from povmwalk.engine import (
    OutcomeStatistics,
    StateSpec,
    compare_statistics,
    destructiveness_metric,
    oracle_enumerate,
    oracle_string,
    run_pipeline,
    run_trajectory,
    sample_step_outcome,
)
from povmwalk.errors import ValidationError
from povmwalk.fixtures import plus_x_state, sic_povm, trine_povm, z_povm
from povmwalk.povm import born_probabilities, to_ppovm, validate_povm
from povmwalk.qubit_algebra import ID2, SIGMA_Z
from povmwalk.walk import WalkConfig, init_walk, plan_step

CFG = WalkConfig()


class TestStateSpec:
    def test_pure_normalizes(self):
        spec = StateSpec.pure([2.0, 0.0])
        assert np.allclose(spec.ket, [1.0, 0.0])
        assert np.allclose(spec.density(), np.diag([1.0, 0.0]))

    def test_pure_rejects_zero(self):
        with pytest.raises(ValidationError):
            StateSpec.pure([0.0, 0.0])

    def test_mixed_validation(self):
        with pytest.raises(ValidationError):
            StateSpec.mixed(np.diag([0.9, 0.3]))
        with pytest.raises(ValidationError):
            StateSpec.mixed(np.diag([1.2, -0.2]))

    def test_mixed_eigen_ensemble_mean(self):
        rho = 0.5 * ID2 + 0.3 * SIGMA_Z  # eigenvalues 0.8, 0.2
        spec = StateSpec.mixed(rho)
        rng = np.random.default_rng(0)
        acc = np.zeros((2, 2), dtype=complex)
        n = 4000
        for _ in range(n):
            psi = spec.sample(rng)
            acc += np.outer(psi, psi.conj())
        assert np.abs(acc / n - rho).max() <= 0.03

    def test_haar_density_is_maximally_mixed(self):
        spec = StateSpec.haar()
        assert np.allclose(spec.density(), ID2 / 2)
        rng = np.random.default_rng(1)
        psi = spec.sample(rng)
        assert np.linalg.norm(psi) == pytest.approx(1.0)


class TestSampleStepOutcome:
    def test_distribution_matches_targets(self):
        st = init_walk(to_ppovm(trine_povm()), plus_x_state(), CFG)
        plan = plan_step(st, CFG)
        psi = st.system_state
        probs = np.einsum("kab,b,a->k", plan.targets, psi, psi.conj()).real
        rng = np.random.default_rng(2)
        counts = np.zeros(3)
        n = 20000
        for _ in range(n):
            counts[sample_step_outcome(st, plan, rng)] += 1
        assert np.abs(counts / n - probs).max() <= 4 * math.sqrt(0.25 / n)


class TestRunTrajectory:
    def test_trine_converges(self):
        plan = to_ppovm(trine_povm())
        rec = run_trajectory(plan, plus_x_state(), CFG, np.random.default_rng(3))
        assert rec.converged
        assert rec.vertex in (0, 1, 2)
        assert rec.output_label in trine_povm().labels
        assert rec.steps <= CFG.resolved_max_steps()
        assert rec.final_x.max() >= 1 - CFG.epsilon_vertex
        assert rec.accumulated_op[1, 0] == 0

    def test_trivial_plan_skips_walk(self):
        plan = to_ppovm(validate_povm([ID2]))
        rec = run_trajectory(plan, plus_x_state(), CFG, np.random.default_rng(4))
        assert rec.converged and rec.steps == 0
        assert rec.output_label == 1

    def test_deterministic_given_rng_state(self):
        plan = to_ppovm(trine_povm())
        r1 = run_trajectory(plan, plus_x_state(), CFG, np.random.default_rng(5))
        r2 = run_trajectory(plan, plus_x_state(), CFG, np.random.default_rng(5))
        assert r1.output_label == r2.output_label
        assert r1.steps == r2.steps
        assert np.array_equal(r1.outcomes, r2.outcomes)
        assert np.array_equal(r1.final_state, r2.final_state)


class TestPipeline:
    def test_z_measurement_of_ket0_is_deterministic(self):
        stats, _ = run_pipeline(z_povm(), StateSpec.pure([1.0, 0.0]), CFG,
                                seed=0, trajectories=200)
        assert stats.nonconverged == 0
        assert stats.counts[0] == 200
        assert stats.counts[1] == 0
        assert np.allclose(stats.reference, [1.0, 0.0], atol=1e-12)

    def test_identity_halves_never_walk(self):
        povm = validate_povm([0.5 * ID2, 0.5 * ID2])
        stats, recs = run_pipeline(povm, StateSpec.pure([1.0, 0.0]), CFG,
                                   seed=1, trajectories=400, keep_records=True)
        assert all(r.steps == 0 for r in recs)
        assert stats.counts.sum() == 400
        verdict = compare_statistics(stats)
        assert verdict.passed

    def test_trine_statistics(self):
        stats, _ = run_pipeline(trine_povm(), StateSpec.pure(plus_x_state()), CFG,
                                seed=2, trajectories=1500)
        assert np.allclose(stats.reference, [2 / 3, 1 / 6, 1 / 6], atol=1e-12)
        assert compare_statistics(stats).passed
        assert stats.mean_steps > 0
        assert stats.nonconverged == 0

    def test_destructive_output(self):
        _, recs = run_pipeline(trine_povm(), StateSpec.pure(plus_x_state()), CFG,
                               seed=3, trajectories=50, keep_records=True)
        for rec in recs:
            # the walk leaves the system essentially in |0>; the residual
            # scales with the vertex threshold epsilon
            assert destructiveness_metric(rec) <= 1e-2

    def test_seed_reproducibility(self):
        a, ra = run_pipeline(sic_povm(), StateSpec.haar(), CFG, seed=7,
                             trajectories=120, keep_records=True)
        b, rb = run_pipeline(sic_povm(), StateSpec.haar(), CFG, seed=7,
                             trajectories=120, keep_records=True)
        assert np.array_equal(a.counts, b.counts)
        for x, y in zip(ra, rb):
            assert np.array_equal(x.outcomes, y.outcomes)
            assert np.array_equal(x.final_state, y.final_state)
        c, _ = run_pipeline(sic_povm(), StateSpec.haar(), CFG, seed=8,
                            trajectories=120)
        assert not np.array_equal(a.counts, c.counts)

    def test_dependent_povm_uses_leaves(self):
        base = trine_povm().elements
        povm = validate_povm([0.3 * base[0], 0.7 * base[0], base[1], base[2]])
        stats, recs = run_pipeline(povm, StateSpec.pure(plus_x_state()), CFG,
                                   seed=4, trajectories=1500, keep_records=True)
        ref = born_probabilities(povm, StateSpec.pure(plus_x_state()).density())
        assert np.abs(stats.reference - ref).max() <= 1e-12
        assert compare_statistics(stats).passed
        assert len({r.leaf_id for r in recs}) > 1

    def test_rejects_zero_trajectories(self):
        with pytest.raises(ValidationError):
            run_pipeline(z_povm(), StateSpec.haar(), CFG, seed=0, trajectories=0)


class TestCompareStatistics:
    @staticmethod
    def make_stats(counts, reference):
        counts = np.asarray(counts)
        total = int(counts.sum())
        ref = np.asarray(reference, dtype=float)
        return OutcomeStatistics(
            labels=tuple(range(1, len(counts) + 1)), counts=counts, total=total,
            frequencies=counts / total, reference=ref,
            stderr=np.sqrt(ref * (1 - ref) / total), mean_steps=1.0,
            max_steps=1, mean_final_fidelity=1.0, nonconverged=0,
        )

    def test_exact_match_passes(self):
        stats = self.make_stats([500, 500], [0.5, 0.5])
        v = compare_statistics(stats)
        assert v.passed and np.allclose(v.z_scores, 0.0)

    def test_gross_mismatch_fails(self):
        stats = self.make_stats([900, 100], [0.5, 0.5])
        assert not compare_statistics(stats).passed

    def test_requires_minimum_sample(self):
        stats = self.make_stats([30, 30], [0.5, 0.5])
        with pytest.raises(ValidationError):
            compare_statistics(stats)


class TestOracle:
    def test_depth_one_is_per_step_distribution(self):
        cfg = WalkConfig(phi=0.3)
        report = oracle_enumerate(to_ppovm(trine_povm()), plus_x_state(), cfg, 1)
        sp = math.sin(cfg.phi)
        expect = [(1 + sp) / 3, (1 - sp / 2) / 3, (1 - sp / 2) / 3]
        assert np.abs(report.probabilities - expect).max() <= 1e-12

    def test_depth_zero_single_certain_string(self):
        report = oracle_enumerate(to_ppovm(trine_povm()), plus_x_state(), CFG, 0)
        assert report.probabilities.shape == (1,)
        assert report.probabilities[0] == pytest.approx(1.0)

    def test_totals_are_exact(self):
        for depth in (2, 4, 6):
            report = oracle_enumerate(to_ppovm(trine_povm()), plus_x_state(), CFG, depth)
            assert abs(report.total - 1.0) <= 1e-12
            assert abs(report.grouped.sum() - 1.0) <= 1e-12
            assert report.probabilities.shape == (3**depth,)

    def test_grouped_converges_to_born(self):
        cfg = WalkConfig(phi=0.5)
        born = born_probabilities(trine_povm(), StateSpec.pure(plus_x_state()).density())
        tv_prev = 1.0
        for depth in (4, 8):
            report = oracle_enumerate(to_ppovm(trine_povm()), plus_x_state(), cfg, depth)
            tv = 0.5 * float(np.abs(report.grouped - born).sum())
            assert tv < tv_prev
            tv_prev = tv
        assert tv_prev <= 0.05

    def test_oracle_string_digits(self):
        report = oracle_enumerate(to_ppovm(trine_povm()), plus_x_state(), CFG, 3)
        assert oracle_string(report, 0) == (0, 0, 0)
        assert oracle_string(report, 5) == (0, 1, 2)
        assert oracle_string(report, 26) == (2, 2, 2)

    def test_enumeration_guard(self):
        with pytest.raises(ValidationError):
            oracle_enumerate(to_ppovm(sic_povm()), plus_x_state(), CFG, 11)

    def test_rejects_unnormalized_state(self):
        with pytest.raises(ValidationError):
            oracle_enumerate(to_ppovm(trine_povm()), np.array([1.0, 1.0]), CFG, 2)
