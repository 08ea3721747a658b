import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsa.schemes import (BOT, AdversaryStructure, ProtocolSpec, SharingScheme, all_subsets, builtin_additive4,
                         builtin_dealer, builtin_shamir, builtin_trivial, builtin_xor2, classical_adversary_structure,
                         classical_secure, input_output_filter, make_protocol, pack, parse_builtin, scheme_as_protocol,
                         singletons, square_structure, subset, subsets_of_size, subsets_up_to, uniformize,
                         view_distribution)


def test_pack_low_bits_first():
    assert pack((1, 0), 1) == 1
    assert pack((0, 1), 1) == 2
    assert pack((3, 1, 2), 2) == 3 | 1 << 2 | 2 << 4
    with pytest.raises(ValueError):
        pack((4,), 2)


def test_bottom_is_a_singleton():
    import pickle
    assert pickle.loads(pickle.dumps(BOT)) is BOT
    assert repr(BOT) == "⊥"


def test_structure_canonical_form():
    f = AdversaryStructure.of((1, 0), (2,), (0, 1))
    assert len(f) == 2
    assert list(f) == [frozenset({2}), frozenset({0, 1})]
    assert f == AdversaryStructure.of((2,), (0, 1))
    assert hash(f) == hash(AdversaryStructure.of((0, 1), (2,)))
    assert (1, 0) in f and (0,) not in f
    assert AdversaryStructure.of((2,)) <= f
    assert f.max_size() == 2
    with pytest.raises(ValueError):
        f.check_parties(2)


def test_structure_constructors():
    assert len(singletons(4)) == 4
    assert len(subsets_up_to(4, 2)) == 4 + 6
    assert len(subsets_up_to(3, 1, include_empty=True)) == 4
    assert len(subsets_of_size(5, 2)) == 10
    assert len(all_subsets(3)) == 8
    sq = square_structure(singletons(3))
    assert sq == AdversaryStructure.of((0,), (1,), (2,), (0, 1), (0, 2), (1, 2))


def test_xor2_table():
    x = builtin_xor2()
    for b, r in itertools.product((0, 1), repeat=2):
        assert x.view(0, b, r) == b ^ r
        assert x.view(1, b, r) == r
    assert x.party_names == ("P1", "P2")


def shamir_oracle(points, p, s, coeffs):
    out = []
    for x in points:
        if x is None:
            out.append(coeffs[-1])
        else:
            out.append((s + sum(c * x ** (k + 1) for k, c in enumerate(coeffs))) % p)
    return tuple(out)


@pytest.mark.parametrize("n,t,p", [(2, 1, 3), (3, 1, 5), (3, 2, 5), (4, 2, 5), (5, 3, 7)])
def test_shamir_shares_are_polynomial_evaluations(n, t, p):
    sch = builtin_shamir(n, t, p)
    assert len(sch.randomness) == p ** t
    for s in range(p):
        for r, coeffs in enumerate(sch.randomness):
            assert sch.view_tuple(range(n), s, r) == shamir_oracle(range(1, n + 1), p, s, coeffs)


def test_shamir_gf2_uses_point_at_infinity():
    sch = builtin_shamir(2, 1, 2, points=(1, None))
    for s, c in itertools.product((0, 1), repeat=2):
        assert sch.view_tuple((0, 1), s, c) == ((s + c) % 2, c)


def test_shamir_argument_checks():
    with pytest.raises(ValueError):
        builtin_shamir(3, 1, 4)
    with pytest.raises(ValueError):
        builtin_shamir(3, 3, 5)
    with pytest.raises(ValueError):
        builtin_shamir(3, 1, 3)
    with pytest.raises(ValueError):
        builtin_shamir(2, 1, 3, points=(1, 4))


@pytest.mark.parametrize("n,t,p", [(2, 1, 3), (3, 1, 5), (3, 2, 5), (4, 1, 5), (4, 2, 5), (4, 3, 5), (5, 2, 7)])
def test_shamir_classical_structure_is_threshold(n, t, p):
    got = classical_adversary_structure(builtin_shamir(n, t, p))
    assert got == subsets_up_to(n, t, include_empty=True)


def test_additive4_views():
    proto = builtin_additive4()
    assert proto.randomness == ((0, 0), (0, 1), (1, 0), (1, 1))
    for s in (0, 1):
        for r, (r1, r2) in enumerate(proto.randomness):
            assert proto.view_tuple(range(4), s, r) == (r1 | r2 << 1, r1, r2, r1 ^ r2 ^ s)
    assert proto.inputs_of((0,), 1) == (1,)
    assert proto.inputs_of((1, 2), 1) == (BOT, BOT)
    assert proto.packed_input((0,), 0) == 1 and proto.packed_input((0,), 1) == 2
    assert proto.packed_input((1,), 0) == 0


def test_dealer_views():
    d = builtin_dealer(3, 3)
    for s in range(3):
        for r, rr in enumerate(d.randomness):
            v = d.view_tuple(range(3), s, r)
            assert v[1] == rr[0]
            assert v[2] == (s + sum(rr)) % 3
    # the last pad stays with the dealer, so receivers alone learn nothing
    assert classical_secure(d, (1, 2))
    assert not classical_secure(d, (0, 2)) and not classical_secure(d, (0, 1, 2))


def test_trivial_protocol():
    t = builtin_trivial()
    assert t.outputs_of((1,), 0) == (0,) and t.outputs_of((1,), 1) == (1,)
    assert t.view_bits == 0 and len(t.randomness) == 1


def test_protocol_as_scheme_and_back():
    x = builtin_xor2()
    p = scheme_as_protocol(x)
    assert all(v is BOT for row in p.party_inputs for v in row)
    assert p.views == x.views
    back = p.as_scheme()
    assert back.views == x.views and back.secrets == x.secrets


def test_input_output_filter():
    t = builtin_trivial()
    f = singletons(2)
    # both parties see different outputs, party 0 also a different input
    assert len(input_output_filter(t, f, 0, 1)) == 0
    add = builtin_additive4()
    assert input_output_filter(add, singletons(4), 0, 1) == AdversaryStructure.of((1,), (2,), (3,))


def test_view_table_shape_is_checked():
    with pytest.raises(ValueError):
        SharingScheme("bad", 2, (0,), (0,), (Fraction(1),), 1, (((0, 2),),))
    with pytest.raises(ValueError):
        SharingScheme("bad", 2, (0,), (0,), (Fraction(1, 2),), 1, (((0, 0),),))


def test_uniformize_preserves_view_distributions():
    proto = make_protocol("skew", 2, [(BOT, BOT), (BOT, BOT)], ("a", "b"),
                          lambda i, s, r: (s if r == "a" else 1 - s) if i == 0 else int(r == "b"), 1,
                          weights=(Fraction(1, 4), Fraction(3, 4)))
    u = uniformize(proto)
    assert len(u.randomness) == 4
    assert len(set(u.weights)) == 1
    for a in all_subsets(2):
        for s in (0, 1):
            assert view_distribution(u, a, s) == view_distribution(proto, a, s)
    with pytest.raises(ValueError):
        uniformize(proto, cap=2)


def test_parse_builtin():
    assert parse_builtin("xor2").name == "xor2"
    assert parse_builtin("shamir:3,1,5").n == 3
    assert parse_builtin("dealer:3").n == 3
    assert isinstance(parse_builtin("additive4"), ProtocolSpec)
    for bad in ("xor3", "shamir:3,1", "dealer", "trivial:1"):
        with pytest.raises(ValueError):
            parse_builtin(bad)


@st.composite
def random_schemes(draw):
    n = draw(st.integers(1, 3))
    n_s = draw(st.integers(1, 3))
    n_r = draw(st.integers(1, 4))
    bits = draw(st.integers(1, 2))
    cells = st.integers(0, (1 << bits) - 1)
    views = tuple(tuple(tuple(draw(cells) for _ in range(n)) for _ in range(n_r)) for _ in range(n_s))
    raw = [draw(st.integers(1, 3)) for _ in range(n_r)]
    weights = tuple(Fraction(w, sum(raw)) for w in raw)
    return SharingScheme("rand", n, tuple(range(n_s)), tuple(range(n_r)), weights, bits, views)


@settings(max_examples=80, deadline=None)
@given(random_schemes())
def test_classical_security_is_monotone(scheme):
    # a sub-coalition sees a function of the coalition's view
    g = classical_adversary_structure(scheme)
    assert frozenset() in g
    for a in g:
        for k in range(len(a)):
            for b in itertools.combinations(sorted(a), k):
                assert subset(*b) in g


@settings(max_examples=80, deadline=None)
@given(random_schemes())
def test_classical_security_matches_definition(scheme):
    # oracle: compare exact distributions of the concatenated views
    for a in all_subsets(scheme.n):
        dists = []
        for s in range(len(scheme.secrets)):
            d = {}
            for r, w in enumerate(scheme.weights):
                key = tuple(scheme.views[s][r][i] for i in sorted(a))
                d[key] = d.get(key, 0) + w
            dists.append(d)
        assert classical_secure(scheme, a) == all(d == dists[0] for d in dists)
