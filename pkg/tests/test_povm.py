"""Tests for POVM validation, dependence splitting, and projective conversion.

The splitting and conversion steps are checked against the exact Born-rule
preservation property: the classically mixed pipeline must reproduce
Tr[E_i rho] for every outcome and every state.
"""

import numpy as np
import pytest

from povmwalk.errors import ValidationError
from povmwalk.fixtures import (
    random_density,
    random_povm,
    sic_povm,
    trine_povm,
    z_povm,
)
from povmwalk.povm import (
    LipovmLeaf,
    born_probabilities,
    decompose_to_lipovms,
    find_dependence,
    split_once,
    to_ppovm,
    tree_leaves,
    validate_povm,
)
from povmwalk.qubit_algebra import ID2

P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


class TestValidate:
    def test_z_measurement(self):
        povm = validate_povm([P0, P1])
        assert len(povm) == 2
        assert povm.labels == (1, 2)

    def test_rejects_incomplete(self):
        with pytest.raises(ValidationError, match="identity"):
            validate_povm([P0, 0.5 * P1])

    def test_rejects_negative_element(self):
        with pytest.raises(ValidationError, match="element 0"):
            validate_povm([-0.1 * ID2, 1.1 * ID2])

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValidationError, match="element 0"):
            validate_povm([bad, ID2 - bad])


class TestDependence:
    def test_trine_is_independent(self):
        assert find_dependence(trine_povm()) is None

    def test_sic_is_independent(self):
        assert find_dependence(sic_povm()) is None

    def test_two_identical_halves(self):
        povm = validate_povm([0.5 * ID2, 0.5 * ID2])
        w = find_dependence(povm)
        assert w is not None
        assert np.allclose(np.sort(w.c), [-1.0, 1.0])
        assert w.residual(povm) <= 1e-12

    def test_projector_identity_mix(self):
        # 0.5|0><0| + 0.5|1><1| - 0.5 I = 0, so c = (1, 1, -1) up to order
        povm = validate_povm([0.5 * P0, 0.5 * P1, 0.5 * ID2])
        w = find_dependence(povm)
        assert w is not None
        assert np.allclose(np.sort(np.abs(w.c)), [1.0, 1.0, 1.0], atol=1e-9)
        assert w.residual(povm) <= 1e-12

    def test_five_outcomes_always_dependent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = find_dependence(random_povm(rng, 5))
            assert w is not None


class TestSplit:
    def test_two_identical_halves_gives_trivial_leaves(self):
        povm = validate_povm([0.5 * ID2, 0.5 * ID2])
        w = find_dependence(povm)
        povm_a, prob_a, povm_b, prob_b = split_once(povm, w)
        assert prob_a == pytest.approx(0.5)
        assert prob_b == pytest.approx(0.5)
        assert len(povm_a) == 1 and np.allclose(povm_a.elements[0], ID2)
        assert len(povm_b) == 1 and np.allclose(povm_b.elements[0], ID2)

    def test_branch_probabilities_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            povm = random_povm(rng, 5)
            w = find_dependence(povm)
            _, pa, _, pb = split_once(povm, w)
            assert pa + pb == pytest.approx(1.0)
            assert 0.0 < pa < 1.0

    def test_born_preservation_single_split(self):
        # mixing the two branches with their probabilities reproduces the
        # original outcome distribution exactly
        rng = np.random.default_rng(2)
        for _ in range(100):
            povm = random_povm(rng, 5)
            rho = random_density(rng)
            w = find_dependence(povm)
            povm_a, pa, povm_b, pb = split_once(povm, w)
            ref = born_probabilities(povm, rho)
            combined = dict.fromkeys(povm.labels, 0.0)
            for branch, p in ((povm_a, pa), (povm_b, pb)):
                probs = born_probabilities(branch, rho)
                for lab, pr in zip(branch.labels, probs):
                    combined[lab] += p * pr
            got = np.array([combined[lab] for lab in povm.labels])
            assert np.abs(got - ref).max() <= 1e-10


class TestDecomposeTree:
    def test_independent_povm_is_single_leaf(self):
        tree = decompose_to_lipovms(trine_povm())
        assert isinstance(tree, LipovmLeaf)

    def test_leaves_at_most_four_outcomes(self):
        rng = np.random.default_rng(3)
        for n in (5, 6, 7):
            povm = random_povm(rng, n)
            leaves = tree_leaves(decompose_to_lipovms(povm))
            assert all(len(leaf) <= 4 for leaf, _ in leaves)
            assert sum(p for _, p in leaves) == pytest.approx(1.0)

    def test_born_preservation_full_tree(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            povm = random_povm(rng, 6)
            rho = random_density(rng)
            ref = born_probabilities(povm, rho)
            combined = dict.fromkeys(povm.labels, 0.0)
            for leaf, p in tree_leaves(decompose_to_lipovms(povm)):
                probs = born_probabilities(leaf, rho)
                for lab, pr in zip(leaf.labels, probs):
                    combined[lab] += p * pr
            got = np.array([combined[lab] for lab in povm.labels])
            assert np.abs(got - ref).max() <= 1e-9


class TestToPpovm:
    def test_diagonal_example(self):
        povm = validate_povm([np.diag([0.6, 0.2]).astype(complex),
                              np.diag([0.4, 0.8]).astype(complex)])
        plan = to_ppovm(povm)
        assert np.allclose(plan.eigen_large, [0.6, 0.8])
        assert np.allclose(plan.eigen_small, [0.2, 0.4])
        assert np.abs(plan.elements[0] - P0).max() <= 1e-12
        assert np.abs(plan.elements[1] - P1).max() <= 1e-12
        assert np.allclose(plan.conditional, [[0.6, 0.2], [0.4, 0.8]])

    def test_projective_input_is_fixed_point(self):
        plan = to_ppovm(z_povm())
        assert np.allclose(plan.conditional, np.eye(2))
        assert np.abs(plan.elements[0] - P0).max() <= 1e-12

    def test_trivial_single_element(self):
        plan = to_ppovm(validate_povm([ID2]))
        assert plan.trivial
        assert np.allclose(plan.conditional, [[1.0]])

    def test_rejects_all_identity_proportional(self):
        with pytest.raises(ValidationError):
            to_ppovm(validate_povm([0.5 * ID2, 0.5 * ID2]))

    def test_columns_sum_to_one(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 4):
            plan = to_ppovm(random_povm(rng, n))
            assert np.abs(plan.conditional.sum(axis=0) - 1.0).max() <= 1e-12

    def test_reconstruction_oracle(self):
        # conditional mixing of projective elements reproduces the input POVM
        rng = np.random.default_rng(6)
        for _ in range(100):
            povm = random_povm(rng, int(rng.integers(2, 5)))
            plan = to_ppovm(povm)
            recon = np.einsum("ik,kab->iab", plan.conditional, plan.elements)
            assert np.abs(recon - povm.elements).max() <= 1e-10

    def test_born_preservation(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            povm = random_povm(rng, 3)
            rho = random_density(rng)
            plan = to_ppovm(povm)
            proj_probs = np.einsum("kab,ba->k", plan.elements, rho).real
            got = plan.conditional @ proj_probs
            ref = born_probabilities(povm, rho)
            assert np.abs(got - ref).max() <= 1e-10


class TestBorn:
    def test_trine_plus_x(self):
        plus_x = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        probs = born_probabilities(trine_povm(), plus_x)
        assert np.allclose(probs, [2 / 3, 1 / 6, 1 / 6], atol=1e-12)

    def test_sic_maximally_mixed(self):
        probs = born_probabilities(sic_povm(), ID2 / 2)
        assert np.allclose(probs, 0.25, atol=1e-12)

    def test_rejects_unnormalized_state(self):
        with pytest.raises(ValidationError):
            born_probabilities(z_povm(), 2.0 * ID2)
