import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiny import random_tiny_protocol

from qsa.linalg import is_unitary, random_unitary
from qsa.reproductions import ADDITIVE4_U1
from qsa.schemes import (AdversaryStructure, builtin_additive4, builtin_dealer, builtin_shamir, builtin_trivial,
                         builtin_xor2, scheme_as_protocol, singletons, subsets_up_to)
from qsa.simsearch import (BudgetExceeded, ConstructionError, GramViolation, PermutationFamily, UnitaryFamily,
                           analyze_protocol, build_simulator, build_view_matrix, check_lemma_condition,
                           check_theorem_properties, constraint_sets, construct_unitaries, gram_certificate,
                           lemma_residual, permutations_from_unitaries, row_column_sums, search_permutations,
                           secret_sharing_corollary_check, verify_certificate, view_rows)


def test_view_matrix_columns_are_basis_vectors():
    proto = builtin_dealer(2)
    vm = build_view_matrix(proto, (1,), 0)
    # receiver's view at s = 0 is r itself
    assert vm.rows == (((1,), 0), ((1,), 1))
    assert np.array_equal(vm.matrix, np.eye(2))
    assert np.array_equal(build_view_matrix(proto, (1,), 1).matrix, np.array([[0, 1], [1, 0]]))


def test_constraint_sets_follow_inputs_and_outputs():
    d = builtin_dealer(2)
    cons = constraint_sets(d, AdversaryStructure.of((0,)))
    assert cons == {(0, 1): [], (1, 0): []}
    cons = constraint_sets(builtin_additive4(), singletons(4))
    assert cons[(0, 1)] == [(1,), (2,), (3,)]


def test_dealer_with_distinguishing_inputs_is_trivially_simulatable():
    d = builtin_dealer(2)
    f = AdversaryStructure.of((0, 1))
    fam = search_permutations(d, f)
    assert fam is not None and len(fam) == 0
    res = analyze_protocol(d, f, n_random=4)
    assert res.secure and res.verified


def test_additive4_construction():
    proto = builtin_additive4()
    f = singletons(4)
    fam = search_permutations(proto, f)
    assert fam is not None
    assert check_theorem_properties(proto, f, fam)
    us = construct_unitaries(proto, f, fam)
    assert np.array_equal(us[0], np.eye(4))
    # the three single-party constraints have full column rank, so U_1 is forced
    assert np.allclose(us[1], ADDITIVE4_U1, atol=1e-12)
    assert lemma_residual(proto, f, us) <= 1e-12
    for u in us.unitaries:
        rows, cols = row_column_sums(u)
        assert np.allclose(rows, 1) and np.allclose(cols, 1)


def test_explicit_family_and_bad_family():
    proto = builtin_additive4()
    f = singletons(4)
    good = UnitaryFamily((np.eye(4), ADDITIVE4_U1))
    assert check_lemma_condition(proto, f, good)
    bad = UnitaryFamily((np.eye(4), np.eye(4)))
    assert not check_lemma_condition(proto, f, bad)
    with pytest.raises(ConstructionError):
        build_simulator(proto, f, bad)
    with pytest.raises(ValueError):
        lemma_residual(proto, f, UnitaryFamily((np.eye(4),)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_common_right_rotation_preserves_lemma(seed):
    proto = builtin_additive4()
    f = singletons(4)
    w = random_unitary(4, np.random.default_rng(seed))
    fam = UnitaryFamily((w, ADDITIVE4_U1 @ w))
    assert lemma_residual(proto, f, fam) <= 1e-9


def test_permutations_recovered_from_unitaries():
    proto = builtin_additive4()
    f = singletons(4)
    perms = permutations_from_unitaries(proto, f, UnitaryFamily((np.eye(4), ADDITIVE4_U1)))
    assert check_theorem_properties(proto, f, perms)


def test_theorem_properties_need_every_entry():
    proto = builtin_additive4()
    f = singletons(4)
    fam = search_permutations(proto, f)
    partial = PermutationFamily({k: v for k, v in list(fam.perms.items())[1:]}, fam.labelings)
    with pytest.raises(KeyError):
        check_theorem_properties(proto, f, partial)


def test_xor2_as_protocol_has_certificate():
    proto = scheme_as_protocol(builtin_xor2())
    f = singletons(2)
    assert search_permutations(proto, f) is None
    cert = gram_certificate(proto, f)
    assert cert is not None and verify_certificate(proto, f, cert)
    forged = GramViolation(cert.s, cert.s2, cert.a, cert.a, cert.lhs, cert.rhs)
    assert not verify_certificate(proto, f, forged)
    res = analyze_protocol(proto, f, n_random=0)
    assert not res.secure and res.verified


def test_secure_instance_has_no_certificate():
    assert gram_certificate(builtin_additive4(), singletons(4)) is None


def test_trivial_protocol_secure():
    res = analyze_protocol(builtin_trivial(), singletons(2), n_random=5)
    assert res.secure and res.verified and res.battery_distance == 0.0


def test_budget_limits():
    with pytest.raises(BudgetExceeded):
        search_permutations(scheme_as_protocol(builtin_shamir(4, 2, 5)), singletons(4))
    with pytest.raises(BudgetExceeded):
        search_permutations(builtin_additive4(), singletons(4), budget=1)


@pytest.mark.parametrize("n,t,p,k", [(3, 1, 5, 1), (3, 2, 5, 1), (4, 2, 5, 1), (4, 2, 5, 2), (4, 1, 5, 1)])
def test_secret_sharing_corollary(n, t, p, k):
    check = secret_sharing_corollary_check(builtin_shamir(n, t, p), subsets_up_to(n, k))
    assert check.holds
    assert check.theorem1 == (2 * k <= t)


def test_view_rows_cover_all_inputs():
    proto = builtin_additive4()
    assert view_rows(proto, (3,)) == (((3,), 0), ((3,), 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_search_outcome_is_always_backed(seed):
    """Success -> verified simulator with unit row/column sums; absence -> a checkable certificate."""
    proto, f = random_tiny_protocol(seed)
    res = analyze_protocol(proto, f, n_random=4, seed=seed)
    if res.secure:
        assert check_theorem_properties(proto, f, res.family)
        assert res.battery_distance <= 1e-9
        for u in res.unitaries.unitaries:
            assert is_unitary(u)
            rows, cols = row_column_sums(u)
            assert np.allclose(rows, 1, atol=1e-9) and np.allclose(cols, 1, atol=1e-9)
    else:
        assert res.certificate is not None
        assert verify_certificate(proto, f, res.certificate)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_two_inputs_absence_iff_pairwise_violation(seed):
    proto, f = random_tiny_protocol(seed)
    found = search_permutations(proto, f, precheck=False)
    assert (found is None) == (gram_certificate(proto, f) is not None)
    assert (found is None) == (search_permutations(proto, f) is None)
