"""Dense operators on ordered multi-register tensor-product spaces.

Every operator carries a :class:`RegisterLayout` that names its tensor
factors.  Matrices are indexed with the first listed register as the most
significant digit, the usual ``np.kron`` convention.  Nothing in this module
renormalizes a state behind the caller's back.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
EIG_RESIDUAL_TOL = 1e-9
SCHMIDT_TOL = 1e-10


class Party(str, enum.Enum):
    ALICE = "A"
    BOB = "B"


def default_party(register_id: int) -> Party:
    """Odd registers belong to Alice, even ones to Bob."""
    return Party.ALICE if register_id % 2 else Party.BOB


@dataclass(frozen=True)
class Register:
    id: int
    dim: int
    party: Party

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"register {self.id}: dimension must be positive, got {self.dim}")
        object.__setattr__(self, "party", Party(self.party))


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[Register, ...]

    def __post_init__(self):
        regs = tuple(self.registers)
        ids = [r.id for r in regs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate register ids in {ids}")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def uniform(cls, dim: int, ids: Iterable[int]) -> "RegisterLayout":
        """Registers of equal dimension with parity-based party labels."""
        return cls(tuple(Register(i, dim, default_party(i)) for i in ids))

    @classmethod
    def from_dims(cls, dims: Sequence[int], ids: Sequence[int] | None = None) -> "RegisterLayout":
        ids = range(1, len(dims) + 1) if ids is None else ids
        return cls(tuple(Register(i, d, default_party(i)) for i, d in zip(ids, dims, strict=True)))

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(r.dim for r in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.registers else 1

    def __len__(self) -> int:
        return len(self.registers)

    def index(self, register_id: int) -> int:
        for k, r in enumerate(self.registers):
            if r.id == register_id:
                return k
        raise KeyError(f"unknown register id {register_id}; layout has {self.ids}")

    def party_ids(self, party: Party | str) -> tuple[int, ...]:
        party = Party(party)
        return tuple(r.id for r in self.registers if r.party is party)

    def subset(self, ids: Iterable[int]) -> "RegisterLayout":
        return RegisterLayout(tuple(self.registers[self.index(i)] for i in ids))

    def relabel(self, mapping: dict[int, int]) -> "RegisterLayout":
        """Rename registers; parties follow the parity of the new id."""
        return RegisterLayout(tuple(
            Register(mapping.get(r.id, r.id), r.dim, default_party(mapping.get(r.id, r.id)))
            for r in self.registers))

    def to_dict(self) -> list[dict]:
        return [{"id": r.id, "dim": r.dim, "party": r.party.value} for r in self.registers]

    @classmethod
    def from_dict(cls, data: list[dict]) -> "RegisterLayout":
        return cls(tuple(Register(int(r["id"]), int(r["dim"]), Party(r["party"])) for r in data))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DenseOperator:
    matrix: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.layout.dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match layout dimension {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def __repr__(self) -> str:
        return f"DenseOperator(dim={self.dim}, registers={self.layout.ids}, dims={self.layout.dims})"

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def assert_hermitian(self, tol: float = HERMITIAN_TOL) -> "DenseOperator":
        err = self.hermiticity_error()
        if err > tol:
            raise ValueError(f"operator is not Hermitian: max |M - M^dag| = {err:.3e} > {tol:.1e}")
        return self

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def max_abs_diff(self, other: "DenseOperator") -> float:
        _check_same_layout(self.layout, other.layout)
        return float(np.max(np.abs(self.matrix - other.matrix), initial=0.0))

    def relabel(self, mapping: dict[int, int]) -> "DenseOperator":
        return DenseOperator(self.matrix, self.layout.relabel(mapping))

    def as_tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.layout.dims * 2)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        _check_same_layout(self.layout, other.layout)
        return DenseOperator(self.matrix + other.matrix, self.layout)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        _check_same_layout(self.layout, other.layout)
        return DenseOperator(self.matrix - other.matrix, self.layout)

    def __neg__(self) -> "DenseOperator":
        return DenseOperator(-self.matrix, self.layout)

    def __mul__(self, scalar) -> "DenseOperator":
        return DenseOperator(complex(scalar) * self.matrix, self.layout)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "DenseOperator":
        return DenseOperator(self.matrix / complex(scalar), self.layout)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        _check_same_layout(self.layout, other.layout)
        return DenseOperator(self.matrix @ other.matrix, self.layout)

    def to_dict(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {"layout": self.layout.to_dict(), "dim": self.dim,
                "entries": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_dict(cls, data: dict) -> "DenseOperator":
        layout = RegisterLayout.from_dict(data["layout"])
        entries = np.array(data["entries"], dtype=float)
        n = layout.dim
        return cls((entries[:, 0] + 1j * entries[:, 1]).reshape(n, n), layout)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DenseOperator":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class PureVector:
    amplitudes: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        v = _frozen(self.amplitudes)
        if v.shape != (self.layout.dim,):
            raise ValueError(f"vector shape {v.shape} does not match layout dimension {self.layout.dim}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def __repr__(self) -> str:
        return f"PureVector(dim={self.dim}, registers={self.layout.ids}, norm={self.norm():.6g})"

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureVector(self.amplitudes / n, self.layout)

    def projector(self) -> DenseOperator:
        """The rank-one operator |v><v| (unnormalized if v is)."""
        v = self.amplitudes
        return DenseOperator(np.outer(v, v.conj()), self.layout)

    def inner(self, other: "PureVector") -> complex:
        """<self|other>, conjugate-linear in the first argument."""
        _check_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, op: DenseOperator) -> complex:
        _check_same_layout(self.layout, op.layout)
        v = self.amplitudes
        return complex(np.vdot(v, op.matrix @ v))

    def __add__(self, other: "PureVector") -> "PureVector":
        _check_same_layout(self.layout, other.layout)
        return PureVector(self.amplitudes + other.amplitudes, self.layout)

    def __mul__(self, scalar) -> "PureVector":
        return PureVector(complex(scalar) * self.amplitudes, self.layout)

    __rmul__ = __mul__


def _check_same_layout(a: RegisterLayout, b: RegisterLayout) -> None:
    if a != b:
        raise ValueError(f"layout mismatch: {a.ids}/{a.dims} vs {b.ids}/{b.dims}")


def basis_vector(layout: RegisterLayout, digits: Sequence[int]) -> PureVector:
    """Computational basis vector; ``digits`` are 0-based, one per register."""
    v = np.zeros(layout.dim, dtype=complex)
    v[np.ravel_multi_index(tuple(digits), layout.dims)] = 1.0
    return PureVector(v, layout)


def identity(layout: RegisterLayout) -> DenseOperator:
    return DenseOperator(np.eye(layout.dim), layout)


def tensor(*factors):
    """Kronecker product of operators (or of vectors), concatenating layouts.

    Register ids must already be disjoint; use ``.relabel`` on a factor to
    place it on fresh registers.
    """
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    regs = tuple(r for f in factors for r in f.layout.registers)
    layout = RegisterLayout(regs)
    if all(isinstance(f, DenseOperator) for f in factors):
        return DenseOperator(reduce(np.kron, (f.matrix for f in factors)), layout)
    if all(isinstance(f, PureVector) for f in factors):
        return PureVector(reduce(np.kron, (f.amplitudes for f in factors)), layout)
    raise TypeError("tensor() factors must be all DenseOperator or all PureVector")


def partial_trace(m: DenseOperator, traced: Iterable[int]) -> DenseOperator:
    traced = set(traced)
    for rid in traced:
        m.layout.index(rid)
    n = len(m.layout)
    rows = list(range(n))
    cols = [n + k if r.id not in traced else k for k, r in enumerate(m.layout.registers)]
    keep = [k for k, r in enumerate(m.layout.registers) if r.id not in traced]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    kept_layout = RegisterLayout(tuple(m.layout.registers[k] for k in keep))
    result = np.einsum(m.as_tensor(), rows + cols, out)
    return DenseOperator(np.asarray(result).reshape(kept_layout.dim, kept_layout.dim), kept_layout)


def _transposed_ids(layout: RegisterLayout, which) -> set[int]:
    if isinstance(which, (Party, str)):
        return set(layout.party_ids(which))
    ids = set(which)
    for rid in ids:
        layout.index(rid)
    return ids


def partial_transpose(m: DenseOperator, which: Party | str | Iterable[int] = Party.ALICE) -> DenseOperator:
    """Transpose, in the standard basis, every register of a party (or an explicit id set)."""
    ids = _transposed_ids(m.layout, which)
    n = len(m.layout)
    t = m.as_tensor()
    for k, r in enumerate(m.layout.registers):
        if r.id in ids:
            t = np.swapaxes(t, k, n + k)
    return DenseOperator(t.reshape(m.dim, m.dim), m.layout)


def permute_registers(x, ordering: Sequence[int]):
    """Reorder the tensor factors of an operator or vector."""
    ordering = list(ordering)
    if sorted(ordering) != sorted(x.layout.ids) or len(set(ordering)) != len(ordering):
        raise ValueError(f"{ordering} is not a permutation of register ids {x.layout.ids}")
    perm = [x.layout.index(i) for i in ordering]
    new_layout = x.layout.subset(ordering)
    n = len(perm)
    if isinstance(x, DenseOperator):
        t = np.transpose(x.as_tensor(), perm + [n + p for p in perm])
        return DenseOperator(t.reshape(x.dim, x.dim), new_layout)
    t = np.transpose(x.amplitudes.reshape(x.layout.dims), perm)
    return PureVector(t.reshape(-1), new_layout)


def cut_matrix(v: PureVector, alice: Iterable[int] | None = None) -> np.ndarray:
    """Reshape ``v`` into a (d_A, d_B) coefficient matrix across the cut."""
    alice = list(v.layout.party_ids(Party.ALICE) if alice is None else alice)
    bob = [i for i in v.layout.ids if i not in set(alice)]
    w = permute_registers(v, alice + bob)
    d_a = v.layout.subset(alice).dim
    return w.amplitudes.reshape(d_a, -1)


def schmidt_values(v: PureVector, alice: Iterable[int] | None = None) -> np.ndarray:
    """Schmidt coefficients of ``v`` across the cut, nonincreasing.

    ``alice`` lists the register ids on Alice's side; by default the layout's
    party labels decide.  The squares sum to ``||v||**2``.
    """
    if not np.any(v.amplitudes):
        raise ValueError("Schmidt decomposition of the zero vector is undefined")
    return np.linalg.svd(cut_matrix(v, alice), compute_uv=False)


def schmidt_rank(v: PureVector, alice: Iterable[int] | None = None, tol: float = SCHMIDT_TOL) -> int:
    return int(np.sum(schmidt_values(v, alice) > tol))


def min_eigenpair(m: DenseOperator, herm_tol: float = 1e-10) -> tuple[float, PureVector]:
    """Smallest eigenvalue and a unit eigenvector of a Hermitian operator.

    In a degenerate eigenspace any vector may come back.
    """
    m.assert_hermitian(herm_tol)
    h = (m.matrix + m.matrix.conj().T) / 2
    w, v = np.linalg.eigh(h)
    vec = v[:, 0]
    residual = np.linalg.norm(m.matrix @ vec - w[0] * vec)
    if residual > EIG_RESIDUAL_TOL * max(1.0, np.abs(w).max()):
        raise ArithmeticError(f"eigen-residual {residual:.2e} exceeds tolerance")
    return float(w[0]), PureVector(vec, m.layout)


def filtered_reduction(factors: Sequence[DenseOperator], projector: DenseOperator) -> DenseOperator:
    """tr_K[(projector ⊗ I) (factor_1 ⊗ factor_2 ⊗ ...)], K = projector's registers.

    Contracts the factors directly instead of forming their Kronecker
    product, so an 8-register state at d=3 stays cheap.  The result lives on
    the remaining registers in ascending id order.
    """
    all_regs = [r for f in factors for r in f.layout.registers]
    ids = [r.id for r in all_regs]
    if len(set(ids)) != len(ids):
        raise ValueError("factors must act on disjoint registers")
    measured = set(projector.layout.ids)
    if not measured <= set(ids):
        raise ValueError("projector acts on registers absent from the state")
    label = iter(range(10 * len(ids) + 10))
    row = {i: next(label) for i in ids}
    col = {i: next(label) for i in ids}
    operands = []
    for f in factors:
        fid = f.layout.ids
        operands += [f.as_tensor(), [row[i] for i in fid] + [col[i] for i in fid]]
    pid = projector.layout.ids
    # tr(Pi X) = sum Pi[k, l] X[l, k]: projector rows meet factor columns.
    operands += [projector.as_tensor(), [col[i] for i in pid] + [row[i] for i in pid]]
    keep = sorted(i for i in ids if i not in measured)
    out = [row[i] for i in keep] + [col[i] for i in keep]
    result = np.einsum(*operands, out, optimize=True)
    layout = RegisterLayout(tuple(next(r for r in all_regs if r.id == i) for i in keep))
    return DenseOperator(np.asarray(result).reshape(layout.dim, layout.dim), layout)
