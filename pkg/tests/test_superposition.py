import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsa.schemes import (AdversaryStructure, SharingScheme, all_subsets, builtin_shamir, builtin_xor2, singletons,
                         square_structure, classical_adversary_structure)
from qsa.superposition import (CREATED, SUPPLIED, CorruptionQuery, adversary_state, attack_blocks, attack_outcome,
                               deutsch_jozsa_query, distinguish, is_superposition_secure, joint_view_matrix,
                               mixed_secret_state, standard_attack_query, standard_attack_report, theorem1_verdict)


def oracle_states(scheme, query_amps, width, s_list):
    """Independent construction: basis (subset index, response), xor the packed view into the response."""
    subsets = sorted(query_amps, key=lambda a: (len(a), a))
    dim = len(subsets) << width
    out = []
    for s in s_list:
        rho = np.zeros((dim, dim), dtype=complex)
        for r, w in enumerate(scheme.weights):
            psi = np.zeros(dim, dtype=complex)
            for k, a in enumerate(subsets):
                view = 0
                for j, i in enumerate(a):
                    view |= scheme.views[s][r][i] << (j * scheme.view_bits)
                for resp, amp in query_amps[a].items():
                    psi[(k << width) + (resp ^ view)] += amp
            rho += float(w) * np.outer(psi, psi.conj())
        out.append(rho)
    return out


def helstrom(r0, r1):
    return 0.5 + 0.25 * np.abs(np.linalg.eigvalsh(r0 - r1)).sum()


def test_xor2_standard_attack_matches_hand_computation():
    x = builtin_xor2()
    h = 1 / math.sqrt(2)
    r0, r1 = oracle_states(x, {(0,): {0: h}, (1,): {0: h}}, 1, (0, 1))
    assert helstrom(r0, r1) == pytest.approx(0.75, abs=1e-12)
    q = standard_attack_query((0,), (1,))
    assert distinguish(x, q, 0, 1) == pytest.approx(0.75, abs=1e-12)
    rep = standard_attack_report(x, (0,), (1,), 0, 1)
    assert rep["trace_norm_delta"] == pytest.approx(1.0, abs=1e-12)


def test_xor2_s_block_is_half_identity_minus_flip():
    s_mat, rows, cols = attack_blocks(builtin_xor2(), (0,), (1,), 0, 1)
    assert rows == (0, 1) and cols == (0, 1)
    assert np.allclose(s_mat, 0.5 * np.array([[1, -1], [-1, 1]]))


def test_xor2_deutsch_jozsa_is_perfect():
    x = builtin_xor2()
    q = deutsch_jozsa_query((0,), (1,), 1)
    assert q.mode == SUPPLIED
    assert distinguish(x, q, 0, 1) == pytest.approx(1.0, abs=1e-12)
    amps = {a: {resp: amp for (_, aa, resp), amp in q.amplitudes.items() if aa == a} for a in ((0,), (1,))}
    r0, r1 = oracle_states(x, amps, 1, (0, 1))
    assert helstrom(r0, r1) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_two_party_shamir_block_identity(p):
    sch = builtin_shamir(2, 1, p, points=(1, None) if p == 2 else None)
    for s2 in range(1, p):
        rep = standard_attack_report(sch, (0,), (1,), 0, s2)
        assert rep["p_guess"] >= 0.75 - 1e-9
        assert rep["trace_norm_S"] == pytest.approx(rep["trace_norm_delta"], abs=1e-9)
        assert rep["p_guess"] == pytest.approx(0.5 + rep["trace_norm_delta"] / 4, abs=1e-12)


def test_gf3_value_from_independent_oracle():
    sch = builtin_shamir(2, 1, 3)
    h = 1 / math.sqrt(2)
    r0, r1 = oracle_states(sch, {(0,): {0: h}, (1,): {0: h}}, 2, (0, 1))
    assert distinguish(sch, standard_attack_query((0,), (1,)), 0, 1) == pytest.approx(helstrom(r0, r1), abs=1e-12)


def test_single_subset_queries_are_useless_for_secure_sets():
    sch = builtin_shamir(3, 1, 5)
    q = CorruptionQuery({(0, (1,), 0): 1.0})
    assert distinguish(sch, q, 0, 3) == pytest.approx(0.5)


def test_query_validation():
    with pytest.raises(ValueError):
        CorruptionQuery({(0, (0,), 0): 1.0, (0, (1,), 0): 1.0})
    with pytest.raises(ValueError):
        CorruptionQuery({(0, (0,), 1): 1.0}, CREATED)
    with pytest.raises(ValueError):
        CorruptionQuery({(0, (0, 1), 0): 1.0}, structure=singletons(2))
    with pytest.raises(ValueError):
        standard_attack_query((0,), (0,))
    with pytest.raises(ValueError):
        distinguish(builtin_xor2(), CorruptionQuery({(0, (2,), 0): 1.0}), 0, 1)
    with pytest.raises(ValueError):
        distinguish(builtin_xor2(), standard_attack_query((0,), (1,)), 0, 0)


def test_adversary_state_is_a_density_operator():
    rho = adversary_state(builtin_shamir(3, 2, 5), standard_attack_query((0,), (1, 2)), 2)
    assert rho.trace == pytest.approx(1.0)
    mix = mixed_secret_state(builtin_xor2(), standard_attack_query((0,), (1,)))
    assert mix.trace == pytest.approx(1.0)


def test_attack_outcome_pairs():
    out = attack_outcome(builtin_xor2(), standard_attack_query((0,), (1,)))
    assert out.max_p_guess() == pytest.approx(0.75)


def test_joint_view_matrix_exact_weights():
    m = joint_view_matrix(builtin_xor2(), (0,), (1,), 1)
    assert m == {(1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}


@pytest.mark.parametrize("n,t,p", [(3, 1, 5), (4, 2, 5), (5, 2, 7)])
def test_threshold_halving(n, t, p):
    sch = builtin_shamir(n, t, p)
    lo = AdversaryStructure(tuple(a for a in all_subsets(n) if a and 2 * len(a) <= t))
    hi = AdversaryStructure(tuple(a for a in all_subsets(n) if 2 * len(a) == t + 1 or 2 * len(a) == t + 2))
    if len(lo):
        assert is_superposition_secure(sch, lo) and theorem1_verdict(sch, lo)
    assert not is_superposition_secure(sch, hi) and not theorem1_verdict(sch, hi)


@st.composite
def scheme_and_structure(draw):
    n = draw(st.integers(1, 3))
    n_s = draw(st.integers(2, 3))
    n_r = draw(st.integers(1, 4))
    bits = draw(st.integers(1, 2))
    cells = st.integers(0, (1 << bits) - 1)
    views = tuple(tuple(tuple(draw(cells) for _ in range(n)) for _ in range(n_r)) for _ in range(n_s))
    raw = [draw(st.integers(1, 3)) for _ in range(n_r)]
    scheme = SharingScheme("rand", n, tuple(range(n_s)), tuple(range(n_r)),
                           tuple(Fraction(w, sum(raw)) for w in raw), bits, views)
    subsets = [a for a in all_subsets(n) if a]
    chosen = draw(st.lists(st.sampled_from(subsets), min_size=1, unique=True))
    return scheme, AdversaryStructure(tuple(chosen))


@settings(max_examples=150, deadline=None)
@given(scheme_and_structure())
def test_union_criterion_equals_direct_check(case):
    scheme, f = case
    direct = is_superposition_secure(scheme, f)
    assert direct == theorem1_verdict(scheme, f)
    g = classical_adversary_structure(scheme)
    assert direct == all(a in g for a in square_structure(f))


@settings(max_examples=80, deadline=None)
@given(scheme_and_structure(), st.integers(0, 2**32 - 1))
def test_direct_check_against_state_simulation(case, seed):
    """Secure -> random queries over F never distinguish; insecure -> some two-term query does."""
    scheme, f = case
    subsets = [tuple(sorted(a)) for a in f]
    n_s = len(scheme.secrets)
    if is_superposition_secure(scheme, f):
        rng = np.random.default_rng(seed)
        width = scheme.view_bits * max(len(a) for a in subsets)
        raw = {(int(rng.integers(2)), a, int(rng.integers(1 << width))): complex(*rng.standard_normal(2))
               for a in subsets for _ in range(2)}
        norm = math.sqrt(sum(abs(v) ** 2 for v in raw.values()))
        q = CorruptionQuery({k: v / norm for k, v in raw.items()}, SUPPLIED, f)
        for s in range(1, n_s):
            assert distinguish(scheme, q, 0, s) == pytest.approx(0.5, abs=1e-9)
    else:
        found = False
        for a in subsets:
            for a2 in subsets:
                q = CorruptionQuery({(0, a, 0): 1.0}) if a == a2 else standard_attack_query(a, a2)
                found |= any(distinguish(scheme, q, s, s2) > 0.5 + 1e-9
                             for s in range(n_s) for s2 in range(s + 1, n_s))
        assert found
