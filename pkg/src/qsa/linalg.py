"""Small-dimension complex linear algebra over labeled bases.

Everything here is dense numpy on spaces of at most a few thousand basis
kets. Bases are explicit, ordered tuples of labels so that states built on
different supports can be embedded into a common basis before comparison.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

EPS_NUM = 1e-9
EPS_NORM = 1e-9
DEFAULT_MAX_DIM = 4096


class DimensionError(ValueError):
    """A state space would exceed the configured dimension cap."""


class BasisMismatch(ValueError):
    pass


class NumericalError(RuntimeError):
    """A matrix decomposition failed; the instance is numerically pathological."""


def max_dim() -> int:
    return int(os.environ.get("QSA_MAX_DIM", DEFAULT_MAX_DIM))


def _check_dim(dim: int) -> None:
    cap = max_dim()
    if dim > cap:
        raise DimensionError(f"dimension {dim} exceeds cap {cap} (set QSA_MAX_DIM)")


@dataclass(frozen=True, eq=False)
class LabeledBasis:
    """Ordered basis of kets identified by hashable labels.

    ``factors`` optionally names the components of tuple labels, which is
    what lets :func:`partial_trace` find subsystems.
    """

    labels: tuple
    factors: tuple[str, ...] | None = None
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("basis labels must be pairwise distinct")
        if self.factors is not None:
            factors = tuple(self.factors)
            if len(set(factors)) != len(factors):
                raise ValueError("factor names must be distinct")
            for lab in labels:
                if not isinstance(lab, tuple) or len(lab) != len(factors):
                    raise ValueError(f"label {lab!r} does not match factors {factors}")
            object.__setattr__(self, "factors", factors)
        _check_dim(len(labels))
        object.__setattr__(self, "index", index)

    @classmethod
    def range(cls, dim: int, name: str | None = None) -> "LabeledBasis":
        return cls(tuple((i,) for i in range(dim)), (name,) if name else None)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.index

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledBasis):
            return NotImplemented
        return self.labels == other.labels and self.factors == other.factors

    def __hash__(self):
        return hash((self.labels, self.factors))

    def union(self, other: "LabeledBasis") -> "LabeledBasis":
        """Labels of ``self`` followed by the new labels of ``other``."""
        if self.factors != other.factors:
            raise BasisMismatch("cannot merge bases with different factor names")
        extra = tuple(lab for lab in other.labels if lab not in self.index)
        return LabeledBasis(self.labels + extra, self.factors)


def sorted_basis(labels: Iterable[Hashable], factors=None) -> LabeledBasis:
    return LabeledBasis(tuple(sorted(set(labels), key=repr)), factors)


def _as_tuple(label) -> tuple:
    return label if isinstance(label, tuple) else (label,)


@dataclass(frozen=True, eq=False)
class StateVector:
    basis: LabeledBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ValueError("amplitude vector does not match basis")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > EPS_NORM:
            raise ValueError(f"state not normalized (norm^2 = {norm})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_dict(cls, amps: Mapping, factors=None, basis: LabeledBasis | None = None) -> "StateVector":
        if basis is None:
            basis = LabeledBasis(tuple(amps), factors)
        vec = np.zeros(len(basis), dtype=complex)
        for lab, a in amps.items():
            vec[basis.index[lab]] += a
        return cls(basis, vec)

    @classmethod
    def ket(cls, label, basis: LabeledBasis | None = None) -> "StateVector":
        return cls.from_dict({label: 1.0}, basis=basis)

    def amplitude(self, label) -> complex:
        i = self.basis.index.get(label)
        return 0j if i is None else complex(self.amplitudes[i])

    def as_dict(self, tol: float = 0.0) -> dict:
        return {lab: complex(a) for lab, a in zip(self.basis.labels, self.amplitudes) if abs(a) > tol}

    def density(self) -> "DensityOperator":
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix over a basis."""

    basis: LabeledBasis
    matrix: np.ndarray
    validate: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = len(self.basis)
        if m.shape != (d, d):
            raise ValueError("matrix does not match basis")
        object.__setattr__(self, "matrix", m)
        if self.validate:
            check_density(m)

    @classmethod
    def mixture(cls, weighted: Iterable[tuple[float, StateVector]], basis: LabeledBasis) -> "DensityOperator":
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        for p, psi in weighted:
            v = embed_vector(psi, basis)
            m += p * np.outer(v, v.conj())
        return cls(basis, m)

    def embed(self, basis: LabeledBasis) -> "DensityOperator":
        """Re-express on a larger basis; missing labels get zero rows/columns."""
        if basis == self.basis:
            return self
        idx = [basis.index[lab] for lab in self.basis.labels]
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        m[np.ix_(idx, idx)] = self.matrix
        return DensityOperator(basis, m, validate=False)

    def entry(self, row, col) -> complex:
        i, j = self.basis.index.get(row), self.basis.index.get(col)
        if i is None or j is None:
            return 0j
        return complex(self.matrix[i, j])

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


def check_density(m: np.ndarray, tol: float = EPS_NUM) -> None:
    if not np.allclose(m, m.conj().T, atol=tol, rtol=0):
        raise ValueError("density matrix not Hermitian")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace {tr} != 1")
    if m.shape[0]:
        lo = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if lo < -tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo}")


def embed_vector(psi: StateVector, basis: LabeledBasis) -> np.ndarray:
    if basis == psi.basis:
        return psi.amplitudes
    v = np.zeros(len(basis), dtype=complex)
    for lab, a in zip(psi.basis.labels, psi.amplitudes):
        v[basis.index[lab]] = a
    return v


def common_basis(*bases: LabeledBasis) -> LabeledBasis:
    out = bases[0]
    for b in bases[1:]:
        out = out.union(b)
    return out


def is_unitary(matrix: np.ndarray, tol: float = EPS_NUM) -> bool:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    basis: LabeledBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (len(self.basis), len(self.basis)):
            raise ValueError("matrix does not match basis")
        if not is_unitary(m):
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    def apply(self, psi: StateVector) -> StateVector:
        return StateVector(self.basis, self.matrix @ embed_vector(psi, self.basis))

    def compose(self, other: "UnitaryOperator") -> "UnitaryOperator":
        """``self`` after ``other``."""
        if other.basis != self.basis:
            raise BasisMismatch("unitaries act on different bases")
        return UnitaryOperator(self.basis, self.matrix @ other.matrix)


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = EPS_NUM) -> bool:
    """True iff ``u = λ v`` for a unit scalar λ (compares u†v with λI)."""
    w = np.asarray(v).conj().T @ np.asarray(u)
    lam = w[0, 0]
    return abs(abs(lam) - 1.0) <= tol and np.allclose(w, lam * np.eye(w.shape[0]), atol=tol, rtol=0)


def tensor(u: StateVector, v: StateVector) -> StateVector:
    bu, bv = u.basis, v.basis
    factors = None
    if bu.factors is not None and bv.factors is not None:
        if set(bu.factors) & set(bv.factors):
            raise BasisMismatch("tensor factors must be disjointly named")
        factors = bu.factors + bv.factors
    _check_dim(len(bu) * len(bv))
    labels = tuple(_as_tuple(x) + _as_tuple(y) for x in bu.labels for y in bv.labels)
    return StateVector(LabeledBasis(labels, factors), np.kron(u.amplitudes, v.amplitudes))


def partial_trace(rho: DensityOperator, keep: Sequence[str]) -> DensityOperator:
    """Trace out every named factor not in ``keep``.

    Works on lazily materialized (non-product) bases: a traced label only
    contributes where both composite kets exist in the basis.
    """
    factors = rho.basis.factors
    if factors is None:
        raise ValueError("basis has no named factors")
    unknown = set(keep) - set(factors)
    if unknown:
        raise KeyError(f"unknown subsystem(s): {sorted(unknown)}")
    kept_pos = [i for i, f in enumerate(factors) if f in keep]
    traced_pos = [i for i, f in enumerate(factors) if f not in keep]
    kept_labels: dict = {}
    groups: dict = {}
    for n, lab in enumerate(rho.basis.labels):
        k = tuple(lab[i] for i in kept_pos)
        t = tuple(lab[i] for i in traced_pos)
        kept_labels.setdefault(k, len(kept_labels))
        groups.setdefault(t, []).append((kept_labels[k], n))
    out = np.zeros((len(kept_labels), len(kept_labels)), dtype=complex)
    for members in groups.values():
        ks = [k for k, _ in members]
        ns = [n for _, n in members]
        out[np.ix_(ks, ks)] += rho.matrix[np.ix_(ns, ns)]
    basis = LabeledBasis(tuple(kept_labels), tuple(factors[i] for i in kept_pos))
    return DensityOperator(basis, out, validate=rho.validate)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite matrix entries")
    if m.size == 0:
        return 0.0
    # zero rows/columns carry no singular value mass
    rows = np.flatnonzero(np.abs(m).sum(axis=1) > 0)
    cols = np.flatnonzero(np.abs(m).sum(axis=0) > 0)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    try:
        return float(np.linalg.svd(m[np.ix_(rows, cols)], compute_uv=False).sum())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular value decomposition failed: {exc}") from exc


def trace_distance(rho0: DensityOperator, rho1: DensityOperator) -> float:
    basis = common_basis(rho0.basis, rho1.basis)
    return 0.5 * trace_norm(rho0.embed(basis).matrix - rho1.embed(basis).matrix)


def helstrom_p_guess(rho0: DensityOperator, rho1: DensityOperator) -> float:
    """Optimal equal-prior guessing probability ``1/2 + |rho0 - rho1|_Tr / 4``."""
    if rho0.basis != rho1.basis:
        raise BasisMismatch("states live on different bases; embed them first")
    return 0.5 + 0.25 * trace_norm(rho0.matrix - rho1.matrix)


class AlignResult(NamedTuple):
    unitary: UnitaryOperator
    residual: float
    unique: bool


def align_unitary(b: np.ndarray, c: np.ndarray, tol: float = EPS_NUM) -> AlignResult:
    """Unitary ``U`` minimizing ``||B U - C||_F``.

    Closed form from the SVD ``B^dagger C = W S V^dagger``: ``U = W V^dagger``.
    When ``B^dagger C`` is rank deficient the minimizer is not unique and an
    arbitrary one is returned with ``unique=False``. The caller decides
    whether the residual is acceptable.
    """
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if b.shape != c.shape:
        raise ValueError("B and C must have the same shape")
    w, s, vh = np.linalg.svd(b.conj().T @ c)
    u = w @ vh
    residual = float(np.linalg.norm(b @ u - c))
    unique = bool(s.size == u.shape[0] and s.min() > tol)
    return AlignResult(UnitaryOperator(LabeledBasis.range(u.shape[0]), u), residual, unique)


def lift_classical_function(f: Mapping, input_basis: LabeledBasis, response_basis: LabeledBasis) -> UnitaryOperator:
    """The xor oracle ``|x, a> -> |x, a XOR f(x)>`` as a permutation matrix.

    Response labels are 1-tuples of ints; the response alphabet must be closed
    under bitwise xor.
    """
    responses = [lab[0] for lab in response_basis.labels]
    rset = set(responses)
    if any((a ^ b) not in rset for a in responses for b in responses):
        raise ValueError("response alphabet is not closed under xor")
    missing = [x for x in input_basis.labels if x not in f]
    if missing:
        raise ValueError(f"function undefined on {missing[:3]}")
    basis = LabeledBasis(
        tuple(_as_tuple(x) + (a,) for x in input_basis.labels for a in responses),
        None if input_basis.factors is None or response_basis.factors is None
        else input_basis.factors + response_basis.factors,
    )
    dim = len(basis)
    m = np.zeros((dim, dim))
    for x in input_basis.labels:
        fx = f[x]
        if fx not in rset:
            raise ValueError(f"f({x!r}) = {fx!r} outside the response alphabet")
        for a in responses:
            src = basis.index[_as_tuple(x) + (a,)]
            dst = basis.index[_as_tuple(x) + (a ^ fx,)]
            m[dst, src] = 1.0
    return UnitaryOperator(basis, m)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def complete_unitary(columns: np.ndarray, tol: float = EPS_NUM) -> np.ndarray:
    """Extend orthonormal columns (d x k) to a d x d unitary.

    The first k columns of the result are ``columns``; the rest span the
    orthogonal complement.
    """
    cols = np.asarray(columns, dtype=complex)
    d, k = cols.shape
    if not np.allclose(cols.conj().T @ cols, np.eye(k), atol=tol, rtol=0):
        raise ValueError("columns are not orthonormal")
    if k == d:
        return cols
    u, _, _ = np.linalg.svd(cols, full_matrices=True)
    comp = u[:, k:]
    comp = comp - cols @ (cols.conj().T @ comp)
    q, _ = np.linalg.qr(comp)
    return np.hstack([cols, q[:, : d - k]])
