"""Deciding and synthesizing perfect simulators in created-response mode.

For each subset ``A`` and joint input ``s`` the view matrix ``M(A, s)`` has
column ``r`` equal to ``|A, v_A(s, r)>``. Subsets whose inputs and outputs
cannot tell two joint inputs apart must see the same state; a simulator
exists iff unitaries ``U_s`` align those view matrices.

The search works with *labelings*. Call inputs ``s, s'`` equivalent for
``A`` when ``A`` sees the same inputs and outputs under both. For every
non-trivial class ``K`` of ``A`` the aligned matrix ``M(A, s) U_s`` must
be the same column-permuted copy of the views for every ``s`` in ``K``;
its column list is the labeling ``w_{A,K}``. A unitary ``U_s`` exists
exactly when, for every pair of constrained subsets at ``s``, the labelings
pair up their views with the same multiplicities as ``v_A(s, .)`` and
``v_A'(s, .)`` do.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

import numpy as np

from .linalg import EPS_NUM, align_unitary
from .schemes import AdversaryStructure, ProtocolSpec, SharingScheme, input_output_filter, scheme_as_protocol, uniformize
from .superposition import theorem1_verdict
from .worlds import LocalUnitary, SimulatorSpec, adversary_battery, is_perfect_simulator

DEFAULT_MAX_RANDOMNESS = 8
DEFAULT_NODE_BUDGET = 200_000


class BudgetExceeded(RuntimeError):
    """The search was cut off; simulator existence is undecided."""


class ConstructionError(RuntimeError):
    """Aligning unitaries left a residual above tolerance."""


def _key(a: Iterable[int]) -> tuple:
    return tuple(sorted(a))


def _require_uniform(protocol: ProtocolSpec) -> ProtocolSpec:
    if len(set(protocol.weights)) > 1:
        return uniformize(protocol)
    return protocol


@dataclass(frozen=True, eq=False)
class ViewMatrix:
    a: tuple
    s: int
    rows: tuple
    matrix: np.ndarray


def view_rows(protocol: ProtocolSpec, a: Iterable[int]) -> tuple:
    """Row labels ``(A, view)`` covering every view of ``A`` under any input."""
    a = _key(a)
    vals = {protocol.packed_view(a, s, r) for s in range(len(protocol.inputs)) for r in range(len(protocol.randomness))}
    return tuple((a, v) for v in sorted(vals))


def build_view_matrix(protocol: ProtocolSpec, a: Iterable[int], s: int, rows: tuple | None = None) -> ViewMatrix:
    a = _key(a)
    rows = rows or view_rows(protocol, a)
    idx = {lab: i for i, lab in enumerate(rows)}
    m = np.zeros((len(rows), len(protocol.randomness)))
    for r in range(len(protocol.randomness)):
        m[idx[(a, protocol.packed_view(a, s, r))], r] = 1.0
    return ViewMatrix(a, s, rows, m)


def constraint_sets(protocol: ProtocolSpec, structure: AdversaryStructure) -> dict:
    """``(s, s') -> F_{s,s'}`` for ordered pairs of distinct joint inputs."""
    n_s = len(protocol.inputs)
    return {(s, t): [_key(a) for a in input_output_filter(protocol, structure, s, t)]
            for s in range(n_s) for t in range(n_s) if s != t}


@dataclass(frozen=True, eq=False)
class UnitaryFamily:
    unitaries: tuple
    base_inputs: tuple = ()

    def __getitem__(self, s: int) -> np.ndarray:
        return self.unitaries[s]

    def __len__(self):
        return len(self.unitaries)


def lemma_residual(protocol: ProtocolSpec, structure: AdversaryStructure, fam: UnitaryFamily) -> float:
    """Largest ``|M(A,s) U_s - M(A,s') U_s'|_F`` over the constraint set."""
    n_r = len(protocol.randomness)
    if len(fam) != len(protocol.inputs) or any(u.shape != (n_r, n_r) for u in fam.unitaries):
        raise ValueError("unitary family does not match the protocol dimensions")
    worst = 0.0
    for (s, t), subsets in constraint_sets(protocol, structure).items():
        for a in subsets:
            rows = view_rows(protocol, a)
            lhs = build_view_matrix(protocol, a, s, rows).matrix @ fam[s]
            rhs = build_view_matrix(protocol, a, t, rows).matrix @ fam[t]
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def check_lemma_condition(protocol: ProtocolSpec, structure: AdversaryStructure, fam: UnitaryFamily,
                          tol: float = EPS_NUM) -> bool:
    return lemma_residual(protocol, structure, fam) <= tol


@dataclass(frozen=True, eq=False)
class PermutationFamily:
    """``perms[(s, s', A)]`` is a tuple ``pi`` with ``pi[k]`` the randomness index at slot k."""

    perms: dict
    labelings: dict = field(default_factory=dict)

    def __getitem__(self, key):
        s, t, a = key
        return self.perms[(s, t, _key(a))]

    def __len__(self):
        return len(self.perms)


def _joint(protocol, a, a2, s, pa=None, pa2=None) -> Counter:
    n_r = len(protocol.randomness)
    pa = pa or range(n_r)
    pa2 = pa2 or range(n_r)
    return Counter((protocol.packed_view(a, s, i), protocol.packed_view(a2, s, j)) for i, j in zip(pa, pa2))


def check_theorem_properties(protocol: ProtocolSpec, structure: AdversaryStructure, fam: PermutationFamily) -> bool:
    """Both finite conditions on a permutation family, over distinct input pairs."""
    n_r = len(protocol.randomness)
    cons = constraint_sets(protocol, structure)
    for (s, t), subsets in cons.items():
        for a in subsets:
            for key in ((s, t, a), (t, s, a)):
                if key not in fam.perms:
                    raise KeyError(f"missing permutation for {key}")
                if sorted(fam.perms[key]) != list(range(n_r)):
                    raise ValueError(f"permutation for {key} is not a bijection")
            p, q = fam.perms[(s, t, a)], fam.perms[(t, s, a)]
            if any(protocol.packed_view(a, s, p[k]) != protocol.packed_view(a, t, q[k]) for k in range(n_r)):
                return False
    by_s: dict = {}
    for (s, t), subsets in cons.items():
        for a in subsets:
            by_s.setdefault(s, []).append((t, a))
    for s, items in by_s.items():
        for t, a in items:
            for t2, a2 in items:
                if _joint(protocol, a, a2, s) != _joint(protocol, a, a2, s, fam.perms[(s, t, a)], fam.perms[(s, t2, a2)]):
                    return False
    return True


@dataclass(frozen=True)
class GramViolation:
    """``sum_r |v_A(s,r)><v_A'(s,r)|`` differs from the same sum at ``s2``."""

    s: int
    s2: int
    a: tuple
    a2: tuple
    lhs: tuple
    rhs: tuple


def gram_certificate(protocol: ProtocolSpec, structure: AdversaryStructure) -> GramViolation | None:
    """First violation of the pairwise necessary condition, if any.

    For ``A, A'`` both in ``F_{s,s'}`` the alignment equalities force
    ``M(A,s) M(A',s)^dagger = M(A,s') M(A',s')^dagger``.
    """
    for (s, t), subsets in constraint_sets(protocol, structure).items():
        if t < s:
            continue
        for a in subsets:
            for a2 in subsets:
                lhs, rhs = _joint(protocol, a, a2, s), _joint(protocol, a, a2, t)
                if lhs != rhs:
                    return GramViolation(s, t, a, a2, tuple(sorted(lhs.items())), tuple(sorted(rhs.items())))
    return None


def verify_certificate(protocol: ProtocolSpec, structure: AdversaryStructure, cert: GramViolation) -> bool:
    cons = constraint_sets(protocol, structure)
    members = cons.get((cert.s, cert.s2), [])
    return (cert.a in members and cert.a2 in members
            and _joint(protocol, cert.a, cert.a2, cert.s) != _joint(protocol, cert.a, cert.a2, cert.s2))


def _classes(protocol: ProtocolSpec, structure: AdversaryStructure) -> dict:
    """``(A, class id) -> member inputs`` for classes with at least two inputs."""
    out = {}
    for a in (_key(x) for x in structure):
        groups: dict = {}
        for s in range(len(protocol.inputs)):
            groups.setdefault((protocol.inputs_of(a, s), protocol.outputs_of(a, s)), []).append(s)
        for j, members in enumerate(g for g in groups.values() if len(g) > 1):
            out[(a, j)] = tuple(members)
    return out


def _multiset_perms(counts: Counter):
    """Distinct arrangements of a multiset, in lexicographic order."""
    items = sorted(counts)
    total = sum(counts.values())
    cur: list = []

    def rec():
        if len(cur) == total:
            yield tuple(cur)
            return
        for x in items:
            if counts[x]:
                counts[x] -= 1
                cur.append(x)
                yield from rec()
                cur.pop()
                counts[x] += 1
    yield from rec()


class _Search:
    def __init__(self, protocol, structure, budget):
        self.p = protocol
        self.n_r = len(protocol.randomness)
        self.budget = budget
        self.nodes = 0
        self.vars = _classes(protocol, structure)
        self.var_at: dict = {}
        for var, members in self.vars.items():
            for s in members:
                self.var_at.setdefault(s, []).append(var)
        # edges[(X, Y)] = list of joint Counters (X view, Y view) that the labelings must realize
        self.edges: dict = {}
        for s, vs in self.var_at.items():
            for x in vs:
                for y in vs:
                    if x != y:
                        self.edges.setdefault((x, y), []).append(_joint(protocol, x[0], y[0], s))
        self.nbrs = {v: sorted({y for (x, y) in self.edges if x == v}) for v in self.vars}

    def views(self, var, s):
        return tuple(self.p.packed_view(var[0], s, r) for r in range(self.n_r))

    def order(self):
        seen, order, roots = set(), [], set()
        for v in self.vars:
            if v in seen:
                continue
            roots.add(v)
            seen.add(v)
            queue = deque([v])
            while queue:
                x = queue.popleft()
                order.append(x)
                for y in self.nbrs[x]:
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
        return order, roots

    def candidates(self, var, assigned):
        anchor = next(y for y in self.nbrs[var] if y in assigned)
        wy = assigned[anchor]
        joint = self.edges[(var, anchor)][0]
        groups: dict = {}
        for k, y in enumerate(wy):
            groups.setdefault(y, []).append(k)
        per_group = []
        for y, slots in groups.items():
            cond = Counter({x: c for (x, yy), c in joint.items() if yy == y})
            if sum(cond.values()) != len(slots):
                return
            per_group.append((slots, list(_multiset_perms(cond))))
        for choice in product(*(arr for _, arr in per_group)):
            w = [None] * self.n_r
            for (slots, _), vals in zip(per_group, choice):
                for k, x in zip(slots, vals):
                    w[k] = x
            yield tuple(w)

    def ordered_candidates(self, var, assigned):
        """The var's own view columns first (they succeed whenever views are s-independent)."""
        natural = list(dict.fromkeys(self.views(var, s) for s in self.vars[var]))
        yield from natural
        seen = set(natural)
        for w in self.candidates(var, assigned):
            if w not in seen:
                yield w

    def consistent(self, var, w, assigned):
        for y in self.nbrs[var]:
            if y in assigned:
                pairs = Counter(zip(w, assigned[y]))
                if any(pairs != j for j in self.edges[(var, y)]):
                    return False
        return True

    def run(self):
        order, roots = self.order()
        assigned: dict = {}

        def rec(i):
            if i == len(order):
                return True
            self.nodes += 1
            if self.nodes > self.budget:
                raise BudgetExceeded(f"search exceeded {self.budget} nodes")
            var = order[i]
            if var in roots:
                cands = [self.views(var, self.vars[var][0])]
            else:
                cands = self.ordered_candidates(var, assigned)
            for w in cands:
                self.nodes += 1
                if self.nodes > self.budget:
                    raise BudgetExceeded(f"search exceeded {self.budget} nodes")
                if self.consistent(var, w, assigned):
                    assigned[var] = w
                    if rec(i + 1):
                        return True
                    del assigned[var]
            return False

        # every member of a class must hold the same view multiset
        for var, members in self.vars.items():
            first = Counter(self.views(var, members[0]))
            if any(Counter(self.views(var, s)) != first for s in members[1:]):
                return None
        return dict(assigned) if rec(0) else None


def _least_perm(views: tuple, w: tuple) -> tuple:
    """Lexicographically least ``pi`` with ``views[pi[k]] == w[k]``."""
    pools: dict = {}
    for r, v in enumerate(views):
        pools.setdefault(v, deque()).append(r)
    return tuple(pools[x].popleft() for x in w)


@dataclass
class SearchStats:
    nodes: int = 0


def search_permutations(protocol: ProtocolSpec, structure: AdversaryStructure,
                        max_randomness: int = DEFAULT_MAX_RANDOMNESS, budget: int = DEFAULT_NODE_BUDGET,
                        stats: SearchStats | None = None, precheck: bool = True) -> PermutationFamily | None:
    """A permutation family satisfying both finite conditions, or ``None`` if none exists.

    Raises :class:`BudgetExceeded` when the instance is too large to decide.
    Non-uniform randomness is first spread into equal-weight atoms. With
    ``precheck`` a pairwise Gram violation short-circuits the search.
    """
    protocol = _require_uniform(protocol)
    n_r = len(protocol.randomness)
    if n_r > max_randomness:
        raise BudgetExceeded(f"|R| = {n_r} exceeds the configured limit {max_randomness}")
    # the pairwise Gram equalities are necessary, and cheap to test
    if precheck and gram_certificate(protocol, structure) is not None:
        return None
    srch = _Search(protocol, structure, budget)
    labelings = srch.run()
    if stats is not None:
        stats.nodes = srch.nodes
    if labelings is None:
        return None
    slot = {}
    for (a, j), members in srch.vars.items():
        for s in members:
            slot[(s, a)] = _least_perm(srch.views((a, j), s), labelings[(a, j)])
    perms = {}
    for (s, t), subsets in constraint_sets(protocol, structure).items():
        for a in subsets:
            perms[(s, t, a)] = slot[(s, a)]
    return PermutationFamily(perms, labelings)


def permutations_from_unitaries(protocol: ProtocolSpec, structure: AdversaryStructure, fam: UnitaryFamily,
                                tol: float = 1e-6) -> PermutationFamily:
    """Read permutations off a family passing the alignment condition.

    Each column of ``M(A,s) U_s`` is a basis ket; the permutation sends slot
    ``k`` to the least unused ``r`` with that view.
    """
    protocol = _require_uniform(protocol)
    perms = {}
    for (s, t), subsets in constraint_sets(protocol, structure).items():
        for a in subsets:
            vm = build_view_matrix(protocol, a, s)
            aligned = vm.matrix @ fam[s]
            w = []
            for k in range(aligned.shape[1]):
                i = int(np.argmax(np.abs(aligned[:, k])))
                if abs(aligned[i, k] - 1) > tol:
                    raise ValueError("aligned column is not a basis ket; family fails the alignment condition")
                w.append(vm.rows[i][1])
            views = tuple(protocol.packed_view(a, s, r) for r in range(len(protocol.randomness)))
            perms[(s, t, a)] = _least_perm(views, tuple(w))
    return PermutationFamily(perms)


def construct_unitaries(protocol: ProtocolSpec, structure: AdversaryStructure, perms: PermutationFamily,
                        tol: float = EPS_NUM) -> UnitaryFamily:
    """Procrustes-align each ``U_s`` onto the permuted views, then gauge-fix.

    Inputs that share a constraint form components; the smallest input of each
    component gets ``U = I`` and inputs without constraints get ``I`` too.
    The alignment condition is verified before returning.
    """
    protocol = _require_uniform(protocol)
    n_s, n_r = len(protocol.inputs), len(protocol.randomness)
    cons = constraint_sets(protocol, structure)
    targets: dict = {}
    for (s, t), subsets in cons.items():
        for a in subsets:
            targets.setdefault(s, {})[a] = perms[(s, t, a)]
    raw = [np.eye(n_r, dtype=complex) for _ in range(n_s)]
    for s, per_a in targets.items():
        bs, cs = [], []
        for a, pi in per_a.items():
            m = build_view_matrix(protocol, a, s).matrix
            bs.append(m)
            cs.append(m[:, list(pi)])
        b, c = np.vstack(bs), np.vstack(cs)
        res = align_unitary(b, c)
        if res.residual > tol:
            raise ConstructionError(f"alignment residual {res.residual:.3e} at input {s}")
        raw[s] = res.unitary.matrix
    # gauge: components of the graph s ~ s' whenever F_{s,s'} is nonempty
    comp = list(range(n_s))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x
    for (s, t), subsets in cons.items():
        if subsets:
            rs, rt = find(s), find(t)
            if rs != rt:
                comp[max(rs, rt)] = min(rs, rt)
    bases = sorted({find(s) for s in range(n_s)})
    out = []
    for s in range(n_s):
        base = find(s)
        if s not in targets or s == base:
            out.append(np.eye(n_r, dtype=complex))
        else:
            out.append(raw[s] @ raw[base].conj().T)
    fam = UnitaryFamily(tuple(out), tuple(bases))
    err = lemma_residual(protocol, structure, fam)
    if err > tol:
        raise ConstructionError(f"constructed family violates the alignment condition (residual {err:.3e})")
    return fam


def row_column_sums(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return u.sum(axis=1), u.sum(axis=0)


def build_simulator(protocol: ProtocolSpec, structure: AdversaryStructure, fam: UnitaryFamily,
                    tol: float = EPS_NUM) -> SimulatorSpec:
    """``U_sim_res`` sending ``|0>_sim |A, c, 0>`` to
    ``R^{-1/2} sum_k |k>_sim |A, c, column k of M(A,s) U_s>`` for any input s
    in the class ``c`` of ``A``, completed to a unitary; ``U_sim_query`` is
    the identity.
    """
    protocol = _require_uniform(protocol)
    if not check_lemma_condition(protocol, structure, fam, tol):
        raise ConstructionError("unitary family fails the alignment condition")
    n_r = len(protocol.randomness)
    root = 1 / math.sqrt(n_r)
    images: dict = {}
    for a in (_key(x) for x in structure):
        vm_rows = view_rows(protocol, a)
        for s in range(len(protocol.inputs)):
            src = (0, (a, protocol.packed_input(a, s), protocol.packed_output(a, s), 0))
            if src in images:
                continue
            aligned = build_view_matrix(protocol, a, s, vm_rows).matrix @ fam[s]
            img = {}
            for k in range(n_r):
                for i in np.flatnonzero(np.abs(aligned[:, k]) > 1e-13):
                    lab = (k, (a, src[1][1], src[1][2], vm_rows[i][1]))
                    img[lab] = img.get(lab, 0) + root * aligned[i, k]
            images[src] = img
    gram = _gram(list(images.values()))
    if not np.allclose(gram, np.eye(len(images)), atol=tol):
        raise ConstructionError("simulator images are not orthonormal")
    return SimulatorSpec(LocalUnitary.from_columns(("sim", "q"), images))


def _gram(vectors: list[dict]) -> np.ndarray:
    g = np.zeros((len(vectors), len(vectors)), dtype=complex)
    for i, u in enumerate(vectors):
        for j, v in enumerate(vectors):
            g[i, j] = sum(np.conj(u[k]) * v[k] for k in u.keys() & v.keys())
    return g


@dataclass
class MpcAnalysis:
    """Outcome of deciding simulator existence for one protocol and structure."""

    protocol: ProtocolSpec
    structure: AdversaryStructure
    family: PermutationFamily | None = None
    unitaries: UnitaryFamily | None = None
    simulator: SimulatorSpec | None = None
    battery_distance: float | None = None
    battery_size: int = 0
    certificate: GramViolation | None = None
    nodes: int = 0
    tol: float = EPS_NUM

    @property
    def secure(self) -> bool:
        return self.family is not None

    @property
    def verified(self) -> bool:
        if self.secure:
            return self.battery_distance is not None and self.battery_distance <= self.tol
        return self.certificate is not None


def analyze_protocol(protocol: ProtocolSpec, structure: AdversaryStructure, *, n_random: int = 20, seed: int = 0,
                     max_randomness: int = DEFAULT_MAX_RANDOMNESS, budget: int = DEFAULT_NODE_BUDGET,
                     battery: bool = True, tol: float = EPS_NUM) -> MpcAnalysis:
    """Search, synthesize and verify a simulator; on absence, look for a Gram certificate."""
    protocol = _require_uniform(protocol)
    stats = SearchStats()
    fam = search_permutations(protocol, structure, max_randomness, budget, stats)
    out = MpcAnalysis(protocol, structure, family=fam, nodes=stats.nodes, tol=tol)
    if fam is None:
        out.certificate = gram_certificate(protocol, structure)
        return out
    out.unitaries = construct_unitaries(protocol, structure, fam, tol)
    out.simulator = build_simulator(protocol, structure, out.unitaries, tol)
    if battery:
        advs = adversary_battery(protocol, structure, n_random=n_random, seed=seed)
        check = is_perfect_simulator(protocol, structure, out.simulator, advs, tol)
        out.battery_distance, out.battery_size = check.max_distance, check.n_adversaries
    return out


@dataclass(frozen=True)
class CorollaryCheck:
    theorem1: bool
    search: bool

    @property
    def holds(self) -> bool:
        return self.search or not self.theorem1

    def __bool__(self):
        return self.holds


def secret_sharing_corollary_check(scheme: SharingScheme, structure: AdversaryStructure,
                                   max_randomness: int = 64, budget: int = DEFAULT_NODE_BUDGET) -> CorollaryCheck:
    """A superposition-secure scheme, read as an input-less protocol, admits a simulator."""
    verdict = theorem1_verdict(scheme, structure)
    fam = search_permutations(scheme_as_protocol(scheme), structure, max_randomness, budget)
    return CorollaryCheck(verdict, fam is not None)
