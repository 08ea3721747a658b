"""Superposition corruption attacks against secret-sharing schemes.

An adversary submits one query ``sum alpha_{x,A,a} |x>|A, a>``; the oracle
xors the concatenated views ``v_A(s, r)`` into the response slot. What the
adversary holds afterwards is the mixture over the dealer's randomness.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .linalg import EPS_NORM, DensityOperator, LabeledBasis, helstrom_p_guess, common_basis, trace_norm
from .schemes import AdversaryStructure, SharingScheme, all_subsets, classical_adversary_structure

SUPPLIED = "supplied"
CREATED = "created"
MODES = (SUPPLIED, CREATED)

QUERY_FACTORS = ("env", "A", "resp")


def _key(a: Iterable[int]) -> tuple:
    return tuple(sorted(a))


@dataclass(frozen=True, eq=False)
class CorruptionQuery:
    """Amplitudes over ``(env label, subset, response int)``."""

    amplitudes: Mapping
    mode: str = CREATED
    structure: AdversaryStructure | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        amps: dict = {}
        for (x, a_set, resp), amp in self.amplitudes.items():
            if amp == 0:
                continue
            k = (x, _key(a_set), int(resp))
            amps[k] = amps.get(k, 0) + complex(amp)
        norm = sum(abs(v) ** 2 for v in amps.values())
        if abs(norm - 1.0) > EPS_NORM:
            raise ValueError(f"query not normalized (norm^2 = {norm})")
        if self.mode == CREATED and any(resp for (_, _, resp) in amps):
            raise ValueError("created-mode queries must have an all-zero response register")
        if self.structure is not None:
            allowed = {_key(a) for a in self.structure}
            bad = sorted({a for (_, a, _) in amps if a not in allowed})
            if bad:
                raise ValueError(f"query references subsets outside F: {bad}")
        object.__setattr__(self, "amplitudes", amps)

    def subsets(self) -> list[tuple]:
        return sorted({a for (_, a, _) in self.amplitudes}, key=lambda t: (len(t), t))

    def width(self, scheme) -> int:
        k = self.structure.max_size() if self.structure is not None else max(len(a) for a in self.subsets())
        return scheme.view_bits * k

    def as_supplied(self) -> "CorruptionQuery":
        return CorruptionQuery(self.amplitudes, SUPPLIED, self.structure)


def standard_attack_query(a0: Iterable[int], a1: Iterable[int], structure=None) -> CorruptionQuery:
    """``(|A0, 0> + |A1, 0>)/sqrt 2`` in created mode, no environment."""
    a0, a1 = _key(a0), _key(a1)
    if a0 == a1:
        raise ValueError("the two subsets must differ")
    h = 1 / math.sqrt(2)
    return CorruptionQuery({(0, a0, 0): h, (0, a1, 0): h}, CREATED, structure)


def deutsch_jozsa_query(a0: Iterable[int], a1: Iterable[int], width: int, structure=None) -> CorruptionQuery:
    """Phase-kickback query: both subsets, every response weighted by ``(-1)^popcount(a)``.

    Against xor2 with single-bit shares the returned state is
    ``(|1> + (-1)^b |2>) |-> / sqrt 2`` up to a global sign, so ``b`` is read
    off perfectly.
    """
    a0, a1 = _key(a0), _key(a1)
    if a0 == a1:
        raise ValueError("the two subsets must differ")
    amp = 1 / math.sqrt(2 * (1 << width))
    amps = {}
    for a_set in (a0, a1):
        for resp in range(1 << width):
            amps[(0, a_set, resp)] = amp * (-1) ** bin(resp).count("1")
    return CorruptionQuery(amps, SUPPLIED, structure)


def _check_query(scheme, query: CorruptionQuery) -> int:
    width = query.width(scheme)
    for (_, a, resp) in query.amplitudes:
        if any(i < 0 or i >= scheme.n for i in a):
            raise ValueError(f"subset {a} not contained in parties 0..{scheme.n - 1}")
        if resp >> width:
            raise ValueError(f"response {resp} wider than {width} bits")
    return width


def oracle_outputs(scheme, query: CorruptionQuery, s: int) -> list[tuple[float, dict]]:
    """``(p_r, psi_r)`` pairs, each ``psi_r`` a sparse dict over query labels."""
    _check_query(scheme, query)
    out = []
    for r, p in enumerate(scheme.weights):
        if not p:
            continue
        psi: dict = {}
        for (x, a, resp), amp in query.amplitudes.items():
            lab = (x, a, resp ^ scheme.packed_view(a, s, r))
            psi[lab] = psi.get(lab, 0) + amp
        out.append((float(p), psi))
    return out


def _mixture(pairs, basis: LabeledBasis | None = None) -> DensityOperator:
    if basis is None:
        labels = {lab for _, psi in pairs for lab in psi}
        basis = LabeledBasis(tuple(sorted(labels, key=repr)), QUERY_FACTORS)
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    for p, psi in pairs:
        v = np.zeros(len(basis), dtype=complex)
        for lab, amp in psi.items():
            v[basis.index[lab]] += amp
        m += p * np.outer(v, v.conj())
    return DensityOperator(basis, m)


def adversary_state(scheme, query: CorruptionQuery, s: int, basis: LabeledBasis | None = None) -> DensityOperator:
    """The adversary's post-query state for secret index ``s``.

    The basis is materialized from the support unless one is given.
    """
    return _mixture(oracle_outputs(scheme, query, s), basis)


def _common_states(scheme, query, secrets: Iterable[int]) -> dict[int, DensityOperator]:
    pairs = {s: oracle_outputs(scheme, query, s) for s in secrets}
    labels = {lab for ps in pairs.values() for _, psi in ps for lab in psi}
    basis = LabeledBasis(tuple(sorted(labels, key=repr)), QUERY_FACTORS)
    return {s: _mixture(ps, basis) for s, ps in pairs.items()}


def distinguish(scheme, query: CorruptionQuery, s: int, s2: int) -> float:
    """Helstrom guessing probability between secrets ``s`` and ``s2``."""
    if s == s2:
        raise ValueError("need two different secrets")
    states = _common_states(scheme, query, (s, s2))
    return helstrom_p_guess(states[s], states[s2])


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    states: dict
    p_guess: dict
    secure: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "secure", all(abs(p - 0.5) <= 1e-9 for p in self.p_guess.values()))

    def max_p_guess(self) -> float:
        return max(self.p_guess.values(), default=0.5)


def attack_outcome(scheme, query: CorruptionQuery) -> AttackOutcome:
    n_s = len(scheme.secrets)
    states = _common_states(scheme, query, range(n_s))
    table = {(s, t): helstrom_p_guess(states[s], states[t]) for s in range(n_s) for t in range(s + 1, n_s)}
    return AttackOutcome(states, table)


def joint_view_matrix(scheme, a: Iterable[int], a2: Iterable[int], s: int) -> Counter:
    """Sparse ``sum_r p_r |v_A(s,r)><v_A'(s,r)|`` keyed by ``(row, col)``, exact weights."""
    a, a2 = _key(a), _key(a2)
    m: Counter = Counter()
    for r, p in enumerate(scheme.weights):
        if p:
            m[(scheme.packed_view(a, s, r), scheme.packed_view(a2, s, r))] += p
    return m


def _mask(a: Iterable[int]) -> int:
    out = 0
    for i in a:
        out |= 1 << i
    return out


def _n_secrets(scheme) -> int:
    return len(scheme.secrets) if isinstance(scheme, SharingScheme) else len(scheme.inputs)


@lru_cache(maxsize=None)
def _pair_conflicts(scheme) -> tuple:
    """Row ``m`` = bitmask over subsets ``m2`` whose joint-view matrix with ``m`` varies with s."""
    n = scheme.n
    subsets = all_subsets(n)
    n_s = _n_secrets(scheme)
    rows = [0] * (1 << n)
    for a in subsets:
        for a2 in subsets:
            if _mask(a2) < _mask(a):
                continue
            first = joint_view_matrix(scheme, a, a2, 0)
            if any(joint_view_matrix(scheme, a, a2, s) != first for s in range(1, n_s)):
                rows[_mask(a)] |= 1 << _mask(a2)
                rows[_mask(a2)] |= 1 << _mask(a)
    return tuple(rows)


@lru_cache(maxsize=None)
def _union_conflicts(scheme) -> tuple:
    """Row ``m`` = bitmask over ``m2`` with ``m | m2`` outside the classical structure G."""
    n = scheme.n
    good = {_mask(a) for a in classical_adversary_structure(scheme)}
    rows = [0] * (1 << n)
    for m in range(1 << n):
        for m2 in range(1 << n):
            if (m | m2) not in good:
                rows[m] |= 1 << m2
    return tuple(rows)


def _structure_masks(structure) -> list[int]:
    return [_mask(a) for a in structure]


def _clear(rows: tuple, masks: list[int]) -> bool:
    fam = 0
    for m in masks:
        fam |= 1 << m
    return all(not (rows[m] & fam) for m in masks)


def is_superposition_secure(scheme, structure: AdversaryStructure) -> bool:
    """Direct check: every joint-view matrix for ``A, A'`` in F is independent of the secret.

    The adversary's state depends on the query only through these matrices
    (the response xor merely permutes their entries), so this decides
    security against all queries.
    """
    structure.check_parties(scheme.n)
    return _clear(_pair_conflicts(scheme), _structure_masks(structure))


def theorem1_verdict(scheme, structure: AdversaryStructure) -> bool:
    """Secure iff every pairwise union of members of F is classically secure."""
    structure.check_parties(scheme.n)
    return _clear(_union_conflicts(scheme), _structure_masks(structure))


def _value_index(values) -> dict:
    return {v: i for i, v in enumerate(sorted(values))}


def attack_blocks(scheme, a0, a1, s: int, s2: int):
    """``(S, row values, column values)`` for the standard attack between s and s2.

    ``S = sum_r p_r |v_A0(s,r)><v_A1(s,r)| - (same for s2)``; with this
    convention the full difference of adversary states is
    ``1/2 [[D0, S], [S^dagger, D1]]`` and the diagonal blocks vanish whenever
    ``A0`` and ``A1`` are individually secure.
    """
    m_s = joint_view_matrix(scheme, a0, a1, s)
    m_t = joint_view_matrix(scheme, a0, a1, s2)
    rows = _value_index({k[0] for k in m_s} | {k[0] for k in m_t})
    cols = _value_index({k[1] for k in m_s} | {k[1] for k in m_t})
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    for (i, j), p in m_s.items():
        out[rows[i], cols[j]] += float(p)
    for (i, j), p in m_t.items():
        out[rows[i], cols[j]] -= float(p)
    return out, tuple(rows), tuple(cols)


def attack_submatrix_S(scheme, a0, a1, s: int, s2: int) -> np.ndarray:
    return attack_blocks(scheme, a0, a1, s, s2)[0]


def attack_delta(scheme, a0, a1, s: int, s2: int) -> np.ndarray:
    """Full ``rho_s - rho_s2`` for the standard attack query, on a common basis."""
    q = standard_attack_query(a0, a1)
    states = _common_states(scheme, q, (s, s2))
    return states[s].matrix - states[s2].matrix


def standard_attack_report(scheme, a0, a1, s: int, s2: int) -> dict:
    q = standard_attack_query(a0, a1)
    delta = attack_delta(scheme, a0, a1, s, s2)
    return {
        "p_guess": distinguish(scheme, q, s, s2),
        "trace_norm_S": trace_norm(attack_submatrix_S(scheme, a0, a1, s, s2)),
        "trace_norm_delta": trace_norm(delta),
    }


def mixed_secret_state(scheme, query: CorruptionQuery) -> DensityOperator:
    """``sum_s p_s rho_s`` under the scheme's secret prior."""
    n_s = _n_secrets(scheme)
    states = _common_states(scheme, query, range(n_s))
    prior = scheme.prior if isinstance(scheme, SharingScheme) else [1 / n_s] * n_s
    basis = common_basis(*(st.basis for st in states.values()))
    m = sum(float(p) * states[s].embed(basis).matrix for s, p in enumerate(prior))
    return DensityOperator(basis, m)
