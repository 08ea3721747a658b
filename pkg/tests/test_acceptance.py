"""Acceptance criteria 1-10, one printed pass/fail line each."""
import time

import numpy as np
import pytest

from tiny import all_structures, random_tiny_protocol

from qsa.reproductions import ADDITIVE4_U1, additive4_spot_checks
from qsa.schemes import (builtin_additive4, builtin_dealer, builtin_shamir, builtin_trivial, builtin_xor2,
                         singletons, subsets_of_size)
from qsa.simsearch import (UnitaryFamily, analyze_protocol, build_simulator, build_view_matrix, row_column_sums,
                           verify_certificate, view_rows)
from qsa.superposition import (deutsch_jozsa_query, distinguish, is_superposition_secure, standard_attack_report,
                               theorem1_verdict)
from qsa.worlds import (adversary_battery, demo_no_unitary_simquery, exhaustive_classical_sim_search,
                        is_perfect_simulator, uniform_singleton_query)


@pytest.fixture
def verdict(capsys):
    def record(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return record


def small_builtin_schemes():
    return [
        builtin_xor2(),
        builtin_shamir(2, 1, 2, points=(1, None)),
        builtin_shamir(2, 1, 3),
        builtin_shamir(2, 1, 5),
        builtin_shamir(3, 1, 5),
        builtin_shamir(3, 2, 5),
        builtin_shamir(4, 1, 5),
        builtin_shamir(4, 2, 5),
        builtin_shamir(4, 3, 5),
        builtin_additive4().as_scheme(),
        builtin_dealer(2).as_scheme(),
        builtin_dealer(3).as_scheme(),
        builtin_dealer(4).as_scheme(),
        builtin_trivial().as_scheme(),
    ]


def test_criterion_1_theorem1_end_to_end(verdict):
    t0 = time.perf_counter()
    checked = disagreements = 0
    structures = {n: list(all_structures(n)) for n in range(1, 5)}
    for scheme in small_builtin_schemes():
        for f in structures[scheme.n]:
            checked += 1
            disagreements += is_superposition_secure(scheme, f) != theorem1_verdict(scheme, f)
    elapsed = time.perf_counter() - t0
    verdict(1, disagreements == 0 and elapsed < 60,
            f"{checked} scheme/structure pairs, {disagreements} disagreements, {elapsed:.1f} s")


def test_criterion_2_xor2_attack(verdict):
    x = builtin_xor2()
    rep = standard_attack_report(x, (0,), (1,), 0, 1)
    dj = distinguish(x, deutsch_jozsa_query((0,), (1,), 1), 0, 1)
    # the distance here is the unnormalized trace norm: p = 1/2 + |rho0 - rho1|_Tr / 4
    ok = (abs(rep["trace_norm_delta"] - 1) <= 1e-9 and abs(rep["p_guess"] - 0.75) <= 1e-9
          and abs(dj - 1.0) <= 1e-9)
    verdict(2, ok, f"trace norm {rep['trace_norm_delta']:.12f}, p_guess {rep['p_guess']:.12f}, supplied {dj:.12f}")


def test_criterion_3_two_party_shamir(verdict):
    parts, ok = [], True
    for p in (2, 3, 5):
        sch = builtin_shamir(2, 1, p, points=(1, None) if p == 2 else None)
        rep = standard_attack_report(sch, (0,), (1,), 0, 1)
        gap = abs(rep["trace_norm_S"] - rep["trace_norm_delta"])
        ok &= rep["p_guess"] >= 0.75 - 1e-9 and gap <= 1e-9
        parts.append(f"GF({p}) p_guess {rep['p_guess']:.6f} gap {gap:.1e}")
    verdict(3, ok, "; ".join(parts))


def test_criterion_4_threshold_halving(verdict):
    sch = builtin_shamir(5, 2, 7)
    lo, hi = singletons(5), subsets_of_size(5, 2)
    got = (theorem1_verdict(sch, lo), is_superposition_secure(sch, lo),
           theorem1_verdict(sch, hi), is_superposition_secure(sch, hi))
    verdict(4, got == (True, True, False, False), f"(thm1, direct) singletons {got[:2]}, pairs {got[2:]}")


def test_criterion_5_explicit_unitaries(verdict):
    proto = builtin_additive4()
    entries_ok = set(np.round(ADDITIVE4_U1.ravel() * 2).astype(int)) <= {-1, 0, 1}
    entries_ok &= np.array_equal(np.abs(ADDITIVE4_U1) * 2, np.round(np.abs(ADDITIVE4_U1) * 2))
    residual = 0.0
    for i in (1, 2, 3):
        rows = view_rows(proto, (i,))
        m0 = build_view_matrix(proto, (i,), 0, rows).matrix
        m1 = build_view_matrix(proto, (i,), 1, rows).matrix
        residual = max(residual, float(np.abs(m0 - m1 @ ADDITIVE4_U1).max()))
    spots = additive4_spot_checks()
    verdict(5, entries_ok and residual <= 1e-12 and all(spots),
            f"residual {residual:.1e}, spot checks {spots}")


def test_criterion_6_explicit_simulator(verdict):
    proto = builtin_additive4()
    f = singletons(4)
    sim = build_simulator(proto, f, UnitaryFamily((np.eye(4), ADDITIVE4_U1)))
    battery = adversary_battery(proto, f, n_random=20, seed=0)
    check = is_perfect_simulator(proto, f, sim, battery, tol=1e-9)
    n_elems = 2 * 4
    full = n_elems + n_elems * (n_elems - 1) + 20
    verdict(6, check.max_distance <= 1e-9 and check.n_adversaries == full,
            f"{check.n_adversaries} adversaries, max distance {check.max_distance:.1e}")


def test_criterion_7_dealer_no_go(verdict):
    rep = demo_no_unitary_simquery(builtin_dealer(2))
    ok = abs(rep.real_trace_norm - 2) <= 1e-9 and rep.simulator_input_trace_norm <= 1e-12
    verdict(7, ok, f"real {rep.real_trace_norm:.12f}, simulator input {rep.simulator_input_trace_norm:.1e}, "
                   f"substituted adversary {rep.reduction_distance:.1e}")


def test_criterion_8_no_classical_simulator(verdict):
    proto = builtin_additive4()
    t0 = time.perf_counter()
    res = exhaustive_classical_sim_search(proto, n_c=1, query=uniform_singleton_query(proto))
    elapsed = time.perf_counter() - t0
    verdict(8, res.candidates == 1024 and res.best_distance > 0.01 and elapsed < 60,
            f"{res.candidates} candidates, min distance {res.best_distance:.4f}, {elapsed:.2f} s")


@pytest.fixture(scope="module")
def tiny_corpus():
    out = []
    for seed in range(120):
        proto, f = random_tiny_protocol(seed)
        out.append((proto, f, analyze_protocol(proto, f, n_random=20, seed=seed)))
    return out


def test_criterion_9_search_consistency(verdict, tiny_corpus):
    found = absent = bad = 0
    for proto, f, res in tiny_corpus:
        if res.secure:
            found += 1
            bad += not (res.battery_distance is not None and res.battery_distance <= 1e-9)
        else:
            absent += 1
            bad += not (res.certificate is not None and verify_certificate(proto, f, res.certificate))
    verdict(9, bad == 0 and found + absent >= 100 and found and absent,
            f"{found} simulators verified, {absent} certificates, {bad} failures")


def test_criterion_10_unit_sums(verdict, tiny_corpus):
    unitaries = [u for _, _, res in tiny_corpus if res.secure for u in res.unitaries.unitaries]
    for proto, f in ((builtin_additive4(), singletons(4)), (builtin_trivial(), singletons(2))):
        res = analyze_protocol(proto, f, n_random=0, battery=False)
        unitaries.extend(res.unitaries.unitaries)
    worst = 0.0
    for u in unitaries:
        rows, cols = row_column_sums(u)
        worst = max(worst, float(np.abs(rows - 1).max()), float(np.abs(cols - 1).max()))
    verdict(10, worst <= 1e-9, f"{len(unitaries)} unitaries, worst deviation {worst:.1e}")
