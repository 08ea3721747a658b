"""Purified real- and ideal-world runs of a protocol under a superposition attack.

States are sparse: a dict from one label per named register to an
amplitude. The parties (or ideal functionality) register holds the pair
``(s, r)``, which purifies both the joint input and the randomness.

Query register labels are ``(A, a_in, a_out, a_view)`` with ``A`` a sorted
tuple of 0-based parties and the three response slots fixed-width ints
(see :meth:`ProtocolSpec.widths`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .linalg import (
    EPS_NUM, DensityOperator, LabeledBasis, NumericalError, complete_unitary, is_unitary,
    random_unitary, trace_distance, trace_norm,
)
from .schemes import AdversaryStructure, ProtocolSpec, subset_key
from .superposition import CREATED, MODES, SUPPLIED

NORM_TOL = 1e-12
REAL_REGISTERS = ("p", "in", "out", "env", "q")
IDEAL_REGISTERS = ("if", "in", "out", "sim", "env", "q")
ADVERSARY_REGISTERS = ("in", "env", "q")
BLANK = None


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """A unitary on the span of ``labels`` over some registers, identity elsewhere.

    ``labels`` are tuples with one entry per register in ``registers``.
    """

    registers: tuple
    labels: tuple
    matrix: np.ndarray
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(tuple(x) for x in self.labels)
        if any(len(x) != len(self.registers) for x in labels):
            raise ValueError("label arity does not match the registers")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (len(labels), len(labels)):
            raise ValueError("matrix does not match the labels")
        if not is_unitary(m):
            raise ValueError("matrix is not unitary")
        index = {x: i for i, x in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("duplicate labels")
        object.__setattr__(self, "registers", tuple(self.registers))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "index", index)

    @classmethod
    def identity(cls, registers: Sequence[str]) -> "LocalUnitary":
        return cls(tuple(registers), (), np.zeros((0, 0)))

    @classmethod
    def from_permutation(cls, registers: Sequence[str], mapping: Mapping) -> "LocalUnitary":
        """Complete a partial injective map on labels to a permutation."""
        src = list(mapping)
        dst = [mapping[x] for x in src]
        if len(set(dst)) != len(dst):
            raise ValueError("mapping is not injective")
        labels = list(dict.fromkeys(src + dst))
        free_dst = [x for x in labels if x not in set(dst)]
        free_src = [x for x in labels if x not in mapping]
        full = dict(mapping)
        full.update(zip(free_src, free_dst))
        idx = {x: i for i, x in enumerate(labels)}
        m = np.zeros((len(labels), len(labels)))
        for a, b in full.items():
            m[idx[b], idx[a]] = 1.0
        return cls(tuple(registers), tuple(labels), m)

    @classmethod
    def from_columns(cls, registers: Sequence[str], images: Mapping, extra: Iterable = ()) -> "LocalUnitary":
        """Unitary sending each key label to its image (a dict label -> amplitude).

        Images must be orthonormal; the remaining columns are an arbitrary
        orthonormal completion.
        """
        labels = list(dict.fromkeys(list(images) + [y for v in images.values() for y in v] + list(extra)))
        idx = {x: i for i, x in enumerate(labels)}
        d = len(labels)
        cols = np.zeros((d, len(images)), dtype=complex)
        for j, img in enumerate(images.values()):
            for y, a in img.items():
                cols[idx[y], j] += a
        full = complete_unitary(cols)
        srcs = [idx[x] for x in images]
        rest = [i for i in range(d) if i not in set(srcs)]
        m = np.zeros((d, d), dtype=complex)
        m[:, srcs] = full[:, : len(srcs)]
        m[:, rest] = full[:, len(srcs):]
        return cls(tuple(registers), tuple(labels), m)

    def inverse(self) -> "LocalUnitary":
        return LocalUnitary(self.registers, self.labels, self.matrix.conj().T)

    def then(self, other: "LocalUnitary") -> "LocalUnitary":
        """``other`` applied after ``self``, on the union of both label sets."""
        if other.registers != self.registers:
            raise ValueError("can only chain unitaries on the same registers")
        labels = tuple(dict.fromkeys(self.labels + other.labels))
        return LocalUnitary(self.registers, labels, _embed(other, labels) @ _embed(self, labels))

    def apply_vector(self, label) -> dict:
        i = self.index.get(label)
        if i is None:
            return {label: 1.0}
        col = self.matrix[:, i]
        return {self.labels[j]: col[j] for j in np.flatnonzero(np.abs(col) > 1e-15)}


def _embed(u: LocalUnitary, labels: tuple) -> np.ndarray:
    idx = {x: i for i, x in enumerate(labels)}
    m = np.eye(len(labels), dtype=complex)
    pos = [idx[x] for x in u.labels]
    m[np.ix_(pos, pos)] = u.matrix
    return m


@dataclass(frozen=True, eq=False)
class WorldState:
    registers: tuple
    amps: dict
    stage: str = "init"

    def __post_init__(self):
        norm = sum(abs(a) ** 2 for a in self.amps.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"norm {norm} at stage {self.stage}")

    def position(self, name: str) -> int:
        if name not in self.registers:
            raise KeyError(f"unknown register {name!r}")
        return self.registers.index(name)


def apply_local(state: WorldState, op: LocalUnitary, stage: str) -> WorldState:
    pos = [state.position(r) for r in op.registers]
    out: dict = {}
    for lab, amp in state.amps.items():
        local = tuple(lab[p] for p in pos)
        for new_local, c in op.apply_vector(local).items():
            new = list(lab)
            for p, v in zip(pos, new_local):
                new[p] = v
            key = tuple(new)
            out[key] = out.get(key, 0) + amp * c
    return WorldState(state.registers, _prune(out), stage)


def apply_map(state: WorldState, f: Callable[[tuple], tuple], stage: str) -> WorldState:
    """Apply a basis permutation given as a label -> label function."""
    out: dict = {}
    for lab, amp in state.amps.items():
        key = f(lab)
        if key in out:
            raise ValueError(f"map is not injective at stage {stage}")
        out[key] = amp
    return WorldState(state.registers, out, stage)


def apply_isometry(state: WorldState, f: Callable[[tuple], dict], stage: str) -> WorldState:
    out: dict = {}
    for lab, amp in state.amps.items():
        for key, c in f(lab).items():
            out[key] = out.get(key, 0) + amp * c
    return WorldState(state.registers, _prune(out), stage)


def _prune(amps: dict) -> dict:
    return {k: v for k, v in amps.items() if abs(v) > 1e-15}


def reduced_state(state: WorldState, keep: Sequence[str]) -> DensityOperator:
    """Density operator on the ``keep`` registers; everything else traced out."""
    kp = [state.position(r) for r in keep]
    tp = [i for i in range(len(state.registers)) if i not in kp]
    kept: dict = {}
    groups: dict = {}
    for lab, amp in state.amps.items():
        k = tuple(lab[i] for i in kp)
        kept.setdefault(k, len(kept))
        groups.setdefault(tuple(lab[i] for i in tp), []).append((kept[k], amp))
    order = sorted(kept, key=repr)
    perm = {kept[k]: i for i, k in enumerate(order)}
    m = np.zeros((len(order), len(order)), dtype=complex)
    for members in groups.values():
        v = np.zeros(len(order), dtype=complex)
        for i, a in members:
            v[perm[i]] += a
        m += np.outer(v, v.conj())
    return DensityOperator(LabeledBasis(tuple(order), tuple(keep)), m)


class Layout:
    """Register encodings of a protocol against an adversary structure."""

    def __init__(self, protocol: ProtocolSpec, structure: AdversaryStructure):
        structure.check_parties(protocol.n)
        if not len(structure):
            raise ValueError("adversary structure is empty")
        self.protocol = protocol
        self.structure = structure
        self.w_in, self.w_out, self.w_view = protocol.widths(structure)
        self.subsets = tuple(tuple(sorted(a)) for a in structure)
        self.blank_query = (self.subsets[0], 0, 0, 0)
        self.all_outputs = tuple(
            sum(o << (protocol.output_bits * i) for i, o in enumerate(row)) for row in protocol.outputs
        )

    def input_code(self, a: tuple, s: int) -> int:
        return self.protocol.packed_input(a, s)

    def output_code(self, a: tuple, out_label: int) -> int:
        bits = self.protocol.output_bits
        mask = (1 << bits) - 1
        return sum(((out_label >> (bits * i)) & mask) << (bits * j) for j, i in enumerate(a))

    def view_code(self, a: tuple, s: int, r: int) -> int:
        return self.protocol.packed_view(a, s, r)

    def check_query_label(self, q: tuple) -> None:
        a, ai, ao, av = q
        if a not in self.subsets:
            raise ValueError(f"query subset {a} not in F")
        if ai >> self.w_in or ao >> self.w_out or av >> self.w_view:
            raise ValueError(f"query response {q} exceeds register widths")


@dataclass(frozen=True, eq=False)
class MpcAdversary:
    """Initial environment, input unitary on (in, env), query unitary on (env, q)."""

    env_init: Mapping
    u_in: LocalUnitary
    u_query: LocalUnitary
    mode: str = CREATED

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        norm = sum(abs(a) ** 2 for a in self.env_init.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError("initial environment state not normalized")
        if not set(self.u_in.registers) <= {"in", "env"}:
            raise ValueError("input unitary may only touch in and env")
        if not set(self.u_query.registers) <= {"env", "q"}:
            raise ValueError("query unitary may only touch env and q")
        if self.mode == CREATED and "q" in self.u_query.registers:
            qp = self.u_query.registers.index("q")
            if any(lab[qp][1:] != (0, 0, 0) for lab in self.u_query.labels):
                raise ValueError("created-mode query unitary must keep response slots at zero")

    def validate(self, layout: Layout) -> None:
        if "q" in self.u_query.registers:
            qp = self.u_query.registers.index("q")
            for lab in self.u_query.labels:
                layout.check_query_label(lab[qp])
        if "in" in self.u_in.registers:
            ip = self.u_in.registers.index("in")
            n_s = len(layout.protocol.inputs)
            for lab in self.u_in.labels:
                if not 0 <= lab[ip] < n_s:
                    raise ValueError(f"input register value {lab[ip]} is not a joint input")


@dataclass(frozen=True, eq=False)
class SimulatorSpec:
    """``u_query`` and ``u_res`` act on (sim, q); ``None`` means identity."""

    u_res: LocalUnitary
    u_query: LocalUnitary | None = None

    def __post_init__(self):
        for u in (self.u_res, self.u_query):
            if u is not None and not set(u.registers) <= {"sim", "q"}:
                raise ValueError("simulator unitaries may only touch sim and q")
        if self.u_query is not None and not corruption_preserving(self.u_query):
            raise ValueError("query transformation does not preserve the corrupted-subset distribution")


def identity_simulator() -> SimulatorSpec:
    return SimulatorSpec(LocalUnitary.identity(("sim", "q")))


def corruption_preserving(u: LocalUnitary, tol: float = EPS_NUM) -> bool:
    """True iff ``u`` commutes with every projector onto a fixed subset ``A``."""
    if "q" not in u.registers:
        return True
    qp = u.registers.index("q")
    subsets = [lab[qp][0] for lab in u.labels]
    for i, ai in enumerate(subsets):
        for j, aj in enumerate(subsets):
            if ai != aj and abs(u.matrix[i, j]) > tol:
                return False
    return True


def _initial(registers: tuple, env_init: Mapping, blanks: dict) -> WorldState:
    amps = {}
    for x, a in env_init.items():
        lab = tuple(x if r == "env" else blanks[r] for r in registers)
        amps[lab] = complex(a)
    return WorldState(registers, amps, "init")


def _run_protocol(layout: Layout, pur: str):
    """Blank purification and output registers -> sum_r sqrt(p_r) |(s, r)>|o(s)>."""
    protocol = layout.protocol
    roots = [math.sqrt(float(p)) for p in protocol.weights]

    def iso(registers):
        pp, ip, op = registers.index(pur), registers.index("in"), registers.index("out")

        def f(lab):
            if lab[pp] is not BLANK or lab[op] != 0:
                raise ValueError("protocol run expects blank party and output registers")
            s = lab[ip]
            out = {}
            for r, root in enumerate(roots):
                if root:
                    new = list(lab)
                    new[pp] = (s, r)
                    new[op] = layout.all_outputs[s]
                    out[tuple(new)] = root
            return out
        return f
    return iso


def real_world_run(protocol: ProtocolSpec, structure: AdversaryStructure, adv: MpcAdversary) -> list[WorldState]:
    """States after each of the four real-world stages (plus the initial one)."""
    layout = Layout(protocol, structure)
    adv.validate(layout)
    regs = REAL_REGISTERS
    st = _initial(regs, adv.env_init, {"p": BLANK, "in": 0, "out": 0, "q": layout.blank_query})
    states = [st]
    st = apply_local(st, adv.u_in, "1")
    states.append(st)
    st = apply_isometry(st, _run_protocol(layout, "p")(regs), "2")
    states.append(st)
    st = apply_local(st, adv.u_query, "3")
    states.append(st)
    pp, qp = regs.index("p"), regs.index("q")
    ip, op = regs.index("in"), regs.index("out")

    def oracle(lab):
        s, r = lab[pp]
        a, ai, ao, av = lab[qp]
        new = list(lab)
        new[qp] = (a, ai ^ layout.input_code(a, s), ao ^ layout.output_code(a, lab[op]),
                   av ^ layout.view_code(a, s, r))
        return tuple(new)
    states.append(apply_map(st, oracle, "4"))
    return states


def ideal_world_run(protocol: ProtocolSpec, structure: AdversaryStructure, adv: MpcAdversary,
                    sim: SimulatorSpec) -> list[WorldState]:
    """States after each of the six ideal-world stages (plus the initial one)."""
    layout = Layout(protocol, structure)
    adv.validate(layout)
    regs = IDEAL_REGISTERS
    st = _initial(regs, adv.env_init, {"if": BLANK, "in": 0, "out": 0, "sim": 0, "q": layout.blank_query})
    states = [st]
    st = apply_local(st, adv.u_in, "1")
    states.append(st)
    st = apply_isometry(st, _run_protocol(layout, "if")(regs), "2")
    states.append(st)
    st = apply_local(st, adv.u_query, "3")
    states.append(st)
    if sim.u_query is not None:
        st = apply_local(st, sim.u_query, "4")
    else:
        st = WorldState(regs, st.amps, "4")
    states.append(st)
    qp, ip, op = regs.index("q"), regs.index("in"), regs.index("out")

    def ideal_res(lab):
        a, ai, ao, av = lab[qp]
        new = list(lab)
        new[qp] = (a, ai ^ layout.input_code(a, lab[ip]), ao ^ layout.output_code(a, lab[op]), av)
        return tuple(new)
    st = apply_map(st, ideal_res, "5")
    states.append(st)
    states.append(apply_local(st, sim.u_res, "6"))
    return states


def real_world_state(protocol, structure, adv) -> DensityOperator:
    return reduced_state(real_world_run(protocol, structure, adv)[-1], ADVERSARY_REGISTERS)


def ideal_world_state(protocol, structure, adv, sim) -> DensityOperator:
    return reduced_state(ideal_world_run(protocol, structure, adv, sim)[-1], ADVERSARY_REGISTERS)


def world_distance(protocol, structure, adv, sim) -> float:
    """``|rho_rw - rho_iw|_Tr / 2``."""
    return trace_distance(real_world_state(protocol, structure, adv), ideal_world_state(protocol, structure, adv, sim))


def _input_unitary(target: Mapping) -> LocalUnitary:
    """Send ``|0>_in |0>_env`` to ``target`` (a dict over (in, env) labels)."""
    return LocalUnitary.from_columns(("in", "env"), {(0, 0): dict(target)})


def _query_unitary(layout: Layout, branches: Mapping) -> LocalUnitary:
    """``|e>_env |blank>_q -> |0>_env |branches[e]>_q`` completed to a permutation."""
    mapping = {(e, layout.blank_query): (0, (a, 0, 0, 0)) for e, a in branches.items()}
    return LocalUnitary.from_permutation(("env", "q"), mapping)


def basis_adversary(layout: Layout, elems: Sequence[tuple], amps: Sequence[complex]) -> MpcAdversary:
    """Prepare ``sum_j amps[j] |s_j>_in |A_j, 0>_q`` with the environment left in ``|0>``."""
    slots = list(dict.fromkeys(a for _, a in elems))
    target = {(s, slots.index(a)): amp for (s, a), amp in zip(elems, amps)}
    branches = dict(enumerate(slots))
    return MpcAdversary({0: 1.0}, _input_unitary(target), _query_unitary(layout, branches), CREATED)


def random_adversary(layout: Layout, rng: np.random.Generator, env_dim: int = 2) -> MpcAdversary:
    n_s = len(layout.protocol.inputs)
    env0 = rng.standard_normal(env_dim) + 1j * rng.standard_normal(env_dim)
    env0 /= np.linalg.norm(env0)
    in_labels = tuple((s, e) for s in range(n_s) for e in range(env_dim))
    u_in = LocalUnitary(("in", "env"), in_labels, random_unitary(len(in_labels), rng))
    q_labels = tuple((e, (a, 0, 0, 0)) for e in range(env_dim) for a in layout.subsets)
    u_q = LocalUnitary(("env", "q"), q_labels, random_unitary(len(q_labels), rng))
    return MpcAdversary({e: env0[e] for e in range(env_dim)}, u_in, u_q, CREATED)


def adversary_battery(protocol: ProtocolSpec, structure: AdversaryStructure, n_random: int = 20,
                      seed: int = 0) -> list[MpcAdversary]:
    """Basis and polarization adversaries over (input, subset) pairs, plus random ones.

    The reduced states are quadratic in the amplitudes ``alpha_{s,A}``; basis
    states pin the diagonal and the ``(e + e')``, ``(e + i e')`` combinations
    pin every off-diagonal term of that bilinear form.
    """
    layout = Layout(protocol, structure)
    elems = [(s, a) for s in range(len(protocol.inputs)) for a in layout.subsets]
    h = 1 / math.sqrt(2)
    out = [basis_adversary(layout, [e], [1.0]) for e in elems]
    for i, e in enumerate(elems):
        for e2 in elems[i + 1:]:
            out.append(basis_adversary(layout, [e, e2], [h, h]))
            out.append(basis_adversary(layout, [e, e2], [h, 1j * h]))
    rng = np.random.default_rng(seed)
    out.extend(random_adversary(layout, rng) for _ in range(n_random))
    return out


@dataclass(frozen=True)
class SimulatorCheck:
    perfect: bool
    max_distance: float
    n_adversaries: int

    def __bool__(self):
        return self.perfect


def is_perfect_simulator(protocol: ProtocolSpec, structure: AdversaryStructure, sim: SimulatorSpec,
                         battery: Sequence[MpcAdversary] | None = None, tol: float = EPS_NUM) -> SimulatorCheck:
    if battery is None:
        battery = adversary_battery(protocol, structure)
    if not battery:
        raise ValueError("adversary battery is empty")
    worst = max(world_distance(protocol, structure, adv, sim) for adv in battery)
    return SimulatorCheck(worst <= tol, worst, len(battery))


def uniform_response_query(layout: Layout, a: tuple) -> LocalUnitary:
    """Supplied-mode query on subset ``a`` with the input slot in uniform superposition."""
    k = 1 << layout.w_in
    amp = 1 / math.sqrt(k)
    return LocalUnitary.from_columns(("q",), {(layout.blank_query,): {((a, x, 0, 0),): amp for x in range(k)}})


def _classical_input(s: int) -> LocalUnitary:
    if s == 0:
        return LocalUnitary.identity(("in",))
    return LocalUnitary.from_permutation(("in",), {(0,): (s,)})


@dataclass(frozen=True)
class NoUnitarySimReport:
    real_trace_norm: float
    simulator_input_trace_norm: float
    reduction_distance: float
    corrupted: tuple

    def as_dict(self) -> dict:
        return {
            "real_query_trace_norm": self.real_trace_norm,
            "simulator_input_trace_norm": self.simulator_input_trace_norm,
            "reduction_distance": self.reduction_distance,
            "corrupted": self.corrupted,
        }


def demo_no_unitary_simquery(protocol: ProtocolSpec, a: Iterable[int] = (0, 1), seed: int = 0) -> NoUnitarySimReport:
    """Dealer-style no-go for simulators in supplied mode.

    (i) the query register after a real attack on ``a`` with both joint inputs
    0 and 1 (trace norm of the difference, 2 means orthogonal); (ii) the
    simulator's input after the ideal oracle, which carries no information on
    the input; (iii) a random query transformation ``V`` is undone by the
    adversary that applies ``V^-1`` after its own query, reproducing (ii).
    """
    a = tuple(sorted(a))
    structure = AdversaryStructure.of(a)
    layout = Layout(protocol, structure)
    u_q = uniform_response_query(layout, a)
    sim = identity_simulator()

    def adv(s, uq=u_q):
        return MpcAdversary({0: 1.0}, _classical_input(s), uq, SUPPLIED)

    real = [reduced_state(real_world_run(protocol, structure, adv(s))[-1], ("q",)) for s in (0, 1)]
    ideal = [reduced_state(ideal_world_run(protocol, structure, adv(s), sim)[5], ("sim", "q")) for s in (0, 1)]
    real_tn = 2 * trace_distance(*real)
    sim_tn = 2 * trace_distance(*ideal)

    rng = np.random.default_rng(seed)
    labels = tuple(dict.fromkeys(u_q.labels))
    v = LocalUnitary(("q",), labels, random_unitary(len(labels), rng))
    tilde = u_q.then(v.inverse())
    v_sim = SimulatorSpec(LocalUnitary.identity(("sim", "q")), LocalUnitary(("sim", "q"), tuple((0,) + x for x in labels), v.matrix))
    worst = 0.0
    for s in (0, 1):
        ref = reduced_state(ideal_world_run(protocol, structure, adv(s), sim)[4], ADVERSARY_REGISTERS + ("sim",))
        sub = reduced_state(ideal_world_run(protocol, structure, adv(s, tilde), v_sim)[4], ADVERSARY_REGISTERS + ("sim",))
        worst = max(worst, 2 * trace_distance(ref, sub))
    return NoUnitarySimReport(real_tn, sim_tn, worst, a)


def real_query_state(protocol: ProtocolSpec, query: Mapping, s: int) -> DensityOperator:
    """``sum_r p_r |Psi_r><Psi_r|`` with ``Psi_r = sum_A alpha_A |A, s_A, o_A, v_A(s,r)>``."""
    pairs = []
    for r, p in enumerate(protocol.weights):
        psi = {}
        for a, amp in query.items():
            lab = (a, protocol.packed_input(a, s), protocol.packed_output(a, s), protocol.packed_view(a, s, r))
            psi[lab] = psi.get(lab, 0) + amp
        pairs.append((float(p), psi))
    return _density(pairs)


def _density(pairs) -> DensityOperator:
    labels = sorted({lab for _, psi in pairs for lab in psi}, key=repr)
    basis = LabeledBasis(tuple(labels), ("A", "in", "out", "view"))
    m = np.zeros((len(labels), len(labels)), dtype=complex)
    for p, psi in pairs:
        v = np.zeros(len(labels), dtype=complex)
        for lab, amp in psi.items():
            v[basis.index[lab]] += amp
        m += p * np.outer(v, v.conj())
    return DensityOperator(basis, m)


def classical_sim_in_superposition(protocol: ProtocolSpec, table: Mapping, query: Mapping, s: int,
                                   randomness: Sequence | None = None, weights: Sequence[float] | None = None,
                                   view_width: int | None = None) -> DensityOperator:
    """State returned by running a classical simulator table coherently over the query.

    ``table[(A, in_code, out_code, c)]`` is the simulated view; ``query`` maps
    subsets to amplitudes.
    """
    cs = sorted({k[3] for k in table}) if randomness is None else list(randomness)
    ws = [1 / len(cs)] * len(cs) if weights is None else list(weights)
    width = view_width if view_width is not None else protocol.view_bits * max(len(a) for a in query)
    pairs = []
    for c, p in zip(cs, ws):
        psi = {}
        for a, amp in query.items():
            cin, cout = protocol.packed_input(a, s), protocol.packed_output(a, s)
            val = table[(a, cin, cout, c)]
            if not 0 <= val < (1 << width):
                raise ValueError(f"simulated view {val} is not a {width}-bit string")
            lab = (a, cin, cout, val)
            psi[lab] = psi.get(lab, 0) + amp
        pairs.append((p, psi))
    return _density(pairs)


def uniform_singleton_query(protocol: ProtocolSpec) -> dict:
    amp = 1 / math.sqrt(protocol.n)
    return {(i,): amp for i in range(protocol.n)}


def natural_additive_simulator() -> dict:
    """Each single view sampled from its marginal, shares drawn from ``c = (c1, c2)``."""
    table = {}
    for c in range(4):
        c1, c2 = c & 1, c >> 1
        for code in (1, 2):
            table[((0,), code, 0, c)] = c
        table[((1,), 0, 0, c)] = c1
        table[((2,), 0, 0, c)] = c2
        table[((3,), 0, 0, c)] = c1 ^ c2
    return table


def simulator_keys(protocol: ProtocolSpec, subsets: Iterable[tuple]) -> list[tuple]:
    """Distinct ``(A, in_code, out_code)`` a classical simulator can be asked about."""
    keys = []
    for a in subsets:
        for s in range(len(protocol.inputs)):
            k = (a, protocol.packed_input(a, s), protocol.packed_output(a, s))
            if k not in keys:
                keys.append(k)
    return keys


@dataclass(frozen=True)
class ClassicalSearchResult:
    best_table: dict
    best_distance: float
    candidates: int


def exhaustive_classical_sim_search(protocol: ProtocolSpec, n_c: int = 1, query: Mapping | None = None,
                                    cap: int = 2_000_000, chunk: int = 20000) -> ClassicalSearchResult:
    """Minimize, over every classical simulator table with ``|C| = n_c``, the worst
    trace distance ``|rho_sim,s - rho_real,s|_Tr / 2`` across joint inputs."""
    query = query or uniform_singleton_query(protocol)
    subsets = sorted(query, key=subset_key)
    width = protocol.view_bits * max(len(a) for a in subsets)
    keys = simulator_keys(protocol, subsets)
    n_vals = 1 << width
    slots = len(keys) * n_c
    total = n_vals ** slots
    if total > cap:
        raise ValueError(f"{total} candidate simulators exceed the cap {cap}")

    # common basis (A, view value) per input; inputs/outputs are fixed per (A, s)
    pos = {a: i for i, a in enumerate(subsets)}
    dim = len(subsets) * n_vals
    amps = np.array([query[a] for a in subsets], dtype=complex)
    real_m = []
    key_idx = []
    for s in range(len(protocol.inputs)):
        m = np.zeros((dim, dim), dtype=complex)
        for r, p in enumerate(protocol.weights):
            v = np.zeros(dim, dtype=complex)
            for a in subsets:
                v[pos[a] * n_vals + protocol.packed_view(a, s, r)] += query[a]
            m += float(p) * np.outer(v, v.conj())
        real_m.append(m)
        key_idx.append([keys.index((a, protocol.packed_input(a, s), protocol.packed_output(a, s))) for a in subsets])

    best, best_d = None, math.inf
    digits = n_vals ** np.arange(slots)
    offsets = np.arange(len(subsets))[None, :] * n_vals
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        tables = (idx[:, None] // digits[None, :]) % n_vals  # slot = key * n_c + c
        worst = np.zeros(len(idx))
        for s, m_real in enumerate(real_m):
            rho = np.zeros((len(idx), dim, dim), dtype=complex)
            for c in range(n_c):
                cols = tables[:, [k * n_c + c for k in key_idx[s]]] + offsets
                vecs = np.zeros((len(idx), dim), dtype=complex)
                np.put_along_axis(vecs, cols, amps[None, :], axis=1)
                rho += np.einsum("ni,nj->nij", vecs, vecs.conj()) / n_c
            ev = np.linalg.eigvalsh(rho - m_real[None])
            worst = np.maximum(worst, 0.5 * np.abs(ev).sum(axis=1))
        j = int(np.argmin(worst))
        if worst[j] < best_d:
            best_d = float(worst[j])
            best = tables[j]
    table = {}
    for k, (a, cin, cout) in enumerate(keys):
        for c in range(n_c):
            table[(a, cin, cout, c)] = int(best[k * n_c + c])
    return ClassicalSearchResult(table, best_d, total)
