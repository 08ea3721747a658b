"""Finite-table secret-sharing schemes and deterministic MPC protocols.

Parties are 0-based throughout. Views and outputs are fixed-width bit
strings stored as ints; the view of a subset is the concatenation (in
increasing party order) of its members' views, zero-padded to the common
response width of whichever adversary structure is in use.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

MAX_EXHAUSTIVE_PARTIES = 12


class _Bottom:
    """Marker for 'this party has no input'."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOT = _Bottom()

Subset = frozenset


def subset(*parties: int) -> frozenset:
    return frozenset(parties)


def subset_key(a: Iterable[int]) -> tuple:
    t = tuple(sorted(a))
    return (len(t), t)


def pack(values: Sequence[int], bits: int) -> int:
    """Concatenate fixed-width fields, first field in the low bits."""
    out = 0
    for j, v in enumerate(values):
        if v >> bits:
            raise ValueError(f"value {v} does not fit in {bits} bits")
        out |= v << (bits * j)
    return out


@dataclass(frozen=True, eq=False)
class AdversaryStructure:
    """A family of corruptible subsets, kept in canonical (size, lex) order."""

    members: tuple

    def __post_init__(self):
        uniq = {frozenset(a) for a in self.members}
        object.__setattr__(self, "members", tuple(sorted(uniq, key=subset_key)))

    @classmethod
    def of(cls, *sets: Iterable[int]) -> "AdversaryStructure":
        return cls(tuple(frozenset(s) for s in sets))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, a) -> bool:
        return frozenset(a) in set(self.members)

    def __eq__(self, other):
        if not isinstance(other, AdversaryStructure):
            return NotImplemented
        return set(self.members) == set(other.members)

    def __hash__(self):
        return hash(frozenset(self.members))

    def __le__(self, other: "AdversaryStructure") -> bool:
        return set(self.members) <= set(other.members)

    def __repr__(self):
        return "{" + ", ".join("{" + ",".join(map(str, sorted(a))) + "}" for a in self.members) + "}"

    def max_size(self) -> int:
        return max((len(a) for a in self.members), default=0)

    def check_parties(self, n: int) -> None:
        for a in self.members:
            if any(i < 0 or i >= n for i in a):
                raise ValueError(f"subset {sorted(a)} not contained in parties 0..{n - 1}")


def singletons(n: int) -> AdversaryStructure:
    return AdversaryStructure(tuple(frozenset([i]) for i in range(n)))


def subsets_up_to(n: int, k: int, *, include_empty: bool = False) -> AdversaryStructure:
    lo = 0 if include_empty else 1
    return AdversaryStructure(
        tuple(frozenset(c) for size in range(lo, k + 1) for c in itertools.combinations(range(n), size))
    )


def subsets_of_size(n: int, k: int) -> AdversaryStructure:
    return AdversaryStructure(tuple(frozenset(c) for c in itertools.combinations(range(n), k)))


def all_subsets(n: int) -> list[frozenset]:
    return [frozenset(c) for size in range(n + 1) for c in itertools.combinations(range(n), size)]


def _uniform(k: int) -> tuple:
    return tuple(Fraction(1, k) for _ in range(k))


def _check_weights(weights: Sequence[Fraction]) -> None:
    if not weights:
        raise ValueError("alphabet must be nonempty")
    if any(w < 0 for w in weights):
        raise ValueError("negative probability")
    if sum(weights) != 1:
        raise ValueError(f"probabilities sum to {sum(weights)}, not 1")


@dataclass(frozen=True, eq=False)
class SharingScheme:
    """Secret sharing as a finite table ``views[s][r][i]`` of ``view_bits``-bit ints."""

    name: str
    n: int
    secrets: tuple
    randomness: tuple
    weights: tuple
    view_bits: int
    views: tuple
    secret_prior: tuple | None = None
    party_names: tuple | None = None

    def __post_init__(self):
        if not self.secrets:
            raise ValueError("secret alphabet must be nonempty")
        _check_weights(self.weights)
        if len(self.weights) != len(self.randomness):
            raise ValueError("one weight per randomness value")
        if self.secret_prior is not None:
            _check_weights(self.secret_prior)
        _check_view_table(self.views, len(self.secrets), len(self.randomness), self.n, self.view_bits)
        if self.party_names is None:
            object.__setattr__(self, "party_names", tuple(f"P{i}" for i in range(self.n)))

    @property
    def prior(self) -> tuple:
        return self.secret_prior or _uniform(len(self.secrets))

    def secret_index(self, s) -> int:
        return _lookup(self.secrets, s, "secret")

    def view(self, i: int, s: int, r: int) -> int:
        return self.views[s][r][i]

    def view_tuple(self, a: Iterable[int], s: int, r: int) -> tuple:
        row = self.views[s][r]
        return tuple(row[i] for i in sorted(a))

    def packed_view(self, a: Iterable[int], s: int, r: int) -> int:
        return pack(self.view_tuple(a, s, r), self.view_bits)

    def response_width(self, structure: AdversaryStructure) -> int:
        return self.view_bits * structure.max_size()


def _check_view_table(views, n_s, n_r, n, bits):
    if len(views) != n_s:
        raise ValueError("view table must cover every secret/input")
    for row in views:
        if len(row) != n_r:
            raise ValueError("view table must cover every randomness value")
        for cell in row:
            if len(cell) != n:
                raise ValueError("view table must cover every party")
            for v in cell:
                if not 0 <= v < (1 << bits) and not (bits == 0 and v == 0):
                    raise ValueError(f"view {v} is not a {bits}-bit string")


def _lookup(alphabet, value, what):
    if value in alphabet:
        return alphabet.index(value)
    for i, x in enumerate(alphabet):
        if str(x) == str(value):
            return i
    raise KeyError(f"unknown {what} {value!r}")


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """Deterministic-output protocol.

    ``inputs`` labels the joint inputs; ``party_inputs[s][i]`` is party i's
    input under joint input s, or ``BOT``. Outputs depend on the joint input
    only, never on the randomness.
    """

    name: str
    n: int
    inputs: tuple
    party_inputs: tuple
    randomness: tuple
    weights: tuple
    view_bits: int
    views: tuple
    output_bits: int
    outputs: tuple
    party_names: tuple | None = None

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("input alphabet must be nonempty")
        _check_weights(self.weights)
        if len(self.weights) != len(self.randomness):
            raise ValueError("one weight per randomness value")
        if len(self.party_inputs) != len(self.inputs) or any(len(p) != self.n for p in self.party_inputs):
            raise ValueError("party_inputs must give one entry per party per joint input")
        _check_view_table(self.views, len(self.inputs), len(self.randomness), self.n, self.view_bits)
        if len(self.outputs) != len(self.inputs) or any(len(o) != self.n for o in self.outputs):
            raise ValueError("outputs must give one entry per party per joint input")
        for row in self.outputs:
            for o in row:
                if o >> self.output_bits:
                    raise ValueError(f"output {o} is not a {self.output_bits}-bit string")
        if self.party_names is None:
            object.__setattr__(self, "party_names", tuple(f"P{i}" for i in range(self.n)))
        alphabets = tuple(
            tuple(sorted({p[i] for p in self.party_inputs if p[i] is not BOT}, key=repr)) for i in range(self.n)
        )
        object.__setattr__(self, "_alphabets", alphabets)

    def input_index(self, s) -> int:
        return _lookup(self.inputs, s, "input")

    def input_alphabet(self, i: int) -> tuple:
        return self._alphabets[i]

    @property
    def input_bits(self) -> int:
        return max((len(a) for a in self._alphabets), default=0).bit_length()

    def input_code(self, i: int, value) -> int:
        """0 encodes ``BOT``; alphabet values map to 1, 2, ..."""
        if value is BOT:
            return 0
        return self._alphabets[i].index(value) + 1

    def inputs_of(self, a: Iterable[int], s: int) -> tuple:
        return tuple(self.party_inputs[s][i] for i in sorted(a))

    def outputs_of(self, a: Iterable[int], s: int) -> tuple:
        return tuple(self.outputs[s][i] for i in sorted(a))

    def packed_input(self, a: Iterable[int], s: int) -> int:
        return pack(tuple(self.input_code(i, self.party_inputs[s][i]) for i in sorted(a)), self.input_bits)

    def packed_output(self, a: Iterable[int], s: int) -> int:
        return pack(self.outputs_of(a, s), self.output_bits)

    def view_tuple(self, a: Iterable[int], s: int, r: int) -> tuple:
        row = self.views[s][r]
        return tuple(row[i] for i in sorted(a))

    def packed_view(self, a: Iterable[int], s: int, r: int) -> int:
        return pack(self.view_tuple(a, s, r), self.view_bits)

    def widths(self, structure: AdversaryStructure) -> tuple[int, int, int]:
        """Bit widths of the (input, output, view) response slots."""
        k = structure.max_size()
        return self.input_bits * k, self.output_bits * k, self.view_bits * k

    def as_scheme(self) -> SharingScheme:
        """Forget inputs/outputs: the joint input plays the role of the secret."""
        return SharingScheme(self.name, self.n, self.inputs, self.randomness, self.weights,
                             self.view_bits, self.views, party_names=self.party_names)


def scheme_as_protocol(scheme: SharingScheme) -> ProtocolSpec:
    """A scheme as an input-less, output-less protocol over its secrets."""
    n_s = len(scheme.secrets)
    return ProtocolSpec(
        scheme.name, scheme.n, scheme.secrets, tuple((BOT,) * scheme.n for _ in range(n_s)),
        scheme.randomness, scheme.weights, scheme.view_bits, scheme.views,
        0, tuple((0,) * scheme.n for _ in range(n_s)), scheme.party_names,
    )


def _table(secrets, randomness, n, view):
    return tuple(tuple(tuple(view(i, s, r) for i in range(n)) for r in randomness) for s in secrets)


def builtin_xor2() -> SharingScheme:
    """Two-party bit sharing: ``v_0 = b xor r``, ``v_1 = r``.

    Party 0 and 1 correspond to P1 and P2 of the usual presentation.
    """
    def view(i, b, r):
        return b ^ r if i == 0 else r

    return SharingScheme("xor2", 2, (0, 1), (0, 1), _uniform(2), 1,
                         _table((0, 1), (0, 1), 2, view), party_names=("P1", "P2"))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p ** 0.5) + 1))


INFINITY = None


def builtin_shamir(n: int, t: int, p: int, points: Sequence[int | None] | None = None) -> SharingScheme:
    """Degree-t Shamir sharing over GF(p); party i gets f(points[i]).

    The default evaluation points are 1..n. A point of ``None`` denotes the
    point at infinity, whose share is the leading coefficient; this is the
    only way to fit two parties into GF(2).
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if not 1 <= t < n:
        raise ValueError("threshold must satisfy 1 <= t < n")
    if points is None:
        if p <= n:
            raise ValueError(f"p = {p} <= n = {n}: evaluation points 1..n collide")
        points = tuple(range(1, n + 1))
    points = tuple(points)
    finite = [x % p for x in points if x is not None]
    if len(points) != n or len(set(finite)) != len(finite) or 0 in finite or points.count(None) > 1:
        raise ValueError("need n distinct nonzero evaluation points (at most one at infinity)")
    coeffs = tuple(itertools.product(range(p), repeat=t))

    def share(i, s, c):
        x = points[i]
        if x is None:
            return c[-1]
        acc = 0
        for a in reversed((s,) + c):
            acc = (acc * x + a) % p
        return acc

    bits = max(1, (p - 1).bit_length())
    return SharingScheme(f"shamir({n},{t},{p})", n, tuple(range(p)), coeffs, _uniform(len(coeffs)), bits,
                         _table(range(p), coeffs, n, share))


def builtin_additive4() -> ProtocolSpec:
    """Four parties; P0 holds a bit s and hands out additive shares.

    Views (2 bits each, first component in the low bit):
    ``v_0 = (r1, r2)``, ``v_1 = (r1, 0)``, ``v_2 = (r2, 0)``, ``v_3 = (r1^r2^s, 0)``.
    Randomness ``(r1, r2)`` is enumerated as 00, 01, 10, 11. No outputs.
    """
    rand = tuple(itertools.product((0, 1), repeat=2))

    def view(i, s, r):
        r1, r2 = r
        return [pack((r1, r2), 1), r1, r2, r1 ^ r2 ^ s][i]

    return ProtocolSpec(
        "additive4", 4, (0, 1), ((0, BOT, BOT, BOT), (1, BOT, BOT, BOT)), rand, _uniform(4), 2,
        _table((0, 1), rand, 4, view), 0, ((0,) * 4, (0,) * 4),
    )


def builtin_dealer(n: int, m: int = 2) -> ProtocolSpec:
    """Party 0 (the dealer) shares ``s in Z_m`` with parties 1..n-1.

    The dealer draws ``r_1..r_{n-1}``; party j < n-1 receives ``r_j`` and the
    last party receives ``s + r_1 + ... + r_{n-1} mod m``. The dealer's view is
    its whole randomness tuple. Dealer = P1 and receivers = P2..Pn in the
    1-based presentation.
    """
    if n < 2:
        raise ValueError("dealer protocol needs at least two parties")
    if m < 2:
        raise ValueError("secret alphabet needs at least two values")
    k = n - 1
    rand = tuple(itertools.product(range(m), repeat=k))
    elem = max(1, (m - 1).bit_length())
    bits = elem * k

    def view(i, s, r):
        if i == 0:
            return pack(r, elem)
        if i < n - 1:
            return r[i - 1]
        return (s + sum(r)) % m

    secrets = tuple(range(m))
    party_inputs = tuple((s,) + (BOT,) * k for s in secrets)
    return ProtocolSpec(
        f"dealer({n},{m})", n, secrets, party_inputs, rand, _uniform(len(rand)), bits,
        _table(secrets, rand, n, view), 0, tuple((0,) * n for _ in secrets),
        tuple(f"P{i + 1}" for i in range(n)),
    )


def builtin_trivial() -> ProtocolSpec:
    """Two parties, P0 inputs a bit, everybody outputs it, nobody sees anything."""
    return ProtocolSpec(
        "trivial", 2, (0, 1), ((0, BOT), (1, BOT)), (0,), (Fraction(1),), 0,
        (((0, 0),), ((0, 0),)), 1, ((0, 0), (1, 1)),
    )


def make_protocol(name: str, n: int, party_inputs: Sequence[Sequence], randomness: Sequence,
                  view: Callable[[int, int, object], int], view_bits: int,
                  output: Callable[[int, int], int] | None = None, output_bits: int = 0,
                  weights: Sequence[Fraction] | None = None) -> ProtocolSpec:
    """Build a protocol from callables ``view(i, s_index, r)`` and ``output(i, s_index)``."""
    inputs = tuple(range(len(party_inputs)))
    randomness = tuple(randomness)
    w = tuple(weights) if weights is not None else _uniform(len(randomness))
    outputs = tuple(tuple((output(i, s) if output else 0) for i in range(n)) for s in inputs)
    return ProtocolSpec(name, n, inputs, tuple(tuple(p) for p in party_inputs), randomness, w, view_bits,
                        _table(inputs, randomness, n, view), output_bits, outputs)


def view_distribution(scheme, a: Iterable[int], s: int) -> Counter:
    """Distribution of ``v_A(s, .)`` with exact rational weights."""
    a = tuple(sorted(a))
    dist: Counter = Counter()
    for r, w in enumerate(scheme.weights):
        if w:
            dist[scheme.view_tuple(a, s, r)] += w
    return dist


def classical_secure(scheme, a: Iterable[int]) -> bool:
    """True iff the distribution of the view of ``a`` is the same for every secret."""
    a = tuple(sorted(a))
    if any(i < 0 or i >= scheme.n for i in a):
        raise ValueError(f"subset {a} not contained in parties 0..{scheme.n - 1}")
    n_s = len(scheme.secrets) if isinstance(scheme, SharingScheme) else len(scheme.inputs)
    first = view_distribution(scheme, a, 0)
    return all(view_distribution(scheme, a, s) == first for s in range(1, n_s))


@lru_cache(maxsize=None)
def classical_adversary_structure(scheme) -> AdversaryStructure:
    """Maximal structure G against which the scheme is classically perfectly secure."""
    if scheme.n > MAX_EXHAUSTIVE_PARTIES:
        raise ValueError(f"exhaustive analysis capped at {MAX_EXHAUSTIVE_PARTIES} parties")
    return AdversaryStructure(tuple(a for a in all_subsets(scheme.n) if classical_secure(scheme, a)))


def square_structure(structure: AdversaryStructure) -> AdversaryStructure:
    """All pairwise unions ``B | C`` with ``B, C`` in the structure."""
    members = structure.members
    return AdversaryStructure(tuple({b | c for b in members for c in members}))


def input_output_filter(protocol: ProtocolSpec, structure: AdversaryStructure, s: int, s2: int) -> AdversaryStructure:
    """Subsets whose inputs and outputs agree under joint inputs ``s`` and ``s2``."""
    return AdversaryStructure(tuple(
        a for a in structure
        if protocol.inputs_of(a, s) == protocol.inputs_of(a, s2)
        and protocol.outputs_of(a, s) == protocol.outputs_of(a, s2)
    ))


def uniformize(protocol: ProtocolSpec, cap: int = 64) -> ProtocolSpec:
    """Duplicate randomness atoms until every atom has the same weight.

    Rational weights ``a_r / L`` become ``a_r`` copies of ``r``, each of weight
    ``1/L``; ``L`` may not exceed ``cap``.
    """
    weights = protocol.weights
    if len(set(weights)) <= 1:
        return protocol
    denom = 1
    for w in weights:
        denom = denom * w.denominator // _gcd(denom, w.denominator)
    if denom > cap:
        raise ValueError(f"uniformizing needs {denom} atoms, cap is {cap}")
    rand, views = [], [[] for _ in protocol.inputs]
    for r, w in enumerate(weights):
        copies = int(w * denom)
        for c in range(copies):
            rand.append((protocol.randomness[r], c))
            for s in range(len(protocol.inputs)):
                views[s].append(protocol.views[s][r])
    return ProtocolSpec(protocol.name, protocol.n, protocol.inputs, protocol.party_inputs, tuple(rand),
                        _uniform(len(rand)), protocol.view_bits, tuple(tuple(v) for v in views),
                        protocol.output_bits, protocol.outputs, protocol.party_names)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def parse_builtin(spec: str):
    """``xor2``, ``shamir:n,t,p``, ``dealer:n[,m]``, ``additive4``, ``trivial``."""
    name, _, args = spec.partition(":")
    nums = [int(x) for x in args.split(",")] if args else []
    if name == "xor2" and not nums:
        return builtin_xor2()
    if name == "shamir" and len(nums) == 3:
        return builtin_shamir(*nums)
    if name == "dealer" and len(nums) in (1, 2):
        return builtin_dealer(*nums)
    if name == "additive4" and not nums:
        return builtin_additive4()
    if name == "trivial" and not nums:
        return builtin_trivial()
    raise ValueError(f"unknown builtin {spec!r}")
