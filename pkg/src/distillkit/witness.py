"""Schmidt-rank-2 witnesses for the partial transpose, and the n-copy bound.

A vector of Schmidt rank at most two across A|B is written as
``psi = (U ⊗ I_B) c`` with ``U`` a d_A x 2 isometry and ``c`` a unit vector
in C^2 ⊗ C^{d_B}.  :func:`search_rank2_min` minimizes <psi|M|psi> over that
set by alternating an exact eigenvector step in ``c`` with a retracted
gradient step in ``U``.  The search only ever produces upper bounds on the
true minimum: a negative value comes with its vector as a certificate, a
nonnegative one is evidence and nothing more.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._rational import as_fraction, fraction_str
from .pqalgebra import DEFAULT_DENSE_BUDGET, BudgetExceeded, mu_lambda
from .states import projector_set
from .tensor import (
    DenseOperator,
    Party,
    PureVector,
    RegisterLayout,
    basis_vector,
    cut_matrix,
    partial_transpose,
    permute_registers,
    tensor,
)

UNIT_TOL = 1e-10
IMAG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SchmidtRank2Ansatz:
    alice_isometry: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.alice_isometry, dtype=complex)
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ValueError(f"isometry must be d_A x 2, got shape {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
            raise ValueError("isometry columns are not orthonormal")
        if abs(np.linalg.norm(c) - 1) > 1e-12:
            raise ValueError("coefficient vector is not a unit vector")
        if c.size % 2:
            raise ValueError("coefficient vector must have length 2 d_B")
        object.__setattr__(self, "alice_isometry", u)
        object.__setattr__(self, "coeffs", c)

    @property
    def d_a(self) -> int:
        return self.alice_isometry.shape[0]

    @property
    def d_b(self) -> int:
        return self.coeffs.size // 2

    def vector(self) -> np.ndarray:
        return (self.alice_isometry @ self.coeffs.reshape(2, -1)).reshape(-1)


def random_isometry(rng: np.random.Generator, rows: int, cols: int = 2) -> np.ndarray:
    """Haar-random isometry: QR of a complex Gaussian matrix with phases fixed."""
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_rank2_vectors(rng: np.random.Generator, d_a: int, d_b: int, samples: int) -> np.ndarray:
    """``samples`` unit vectors of Schmidt rank <= 2, one per row, in A-major order."""
    u = np.stack([random_isometry(rng, d_a) for _ in range(samples)])
    c = rng.standard_normal((samples, 2 * d_b)) + 1j * rng.standard_normal((samples, 2 * d_b))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return np.einsum("sak,skb->sab", u, c.reshape(samples, 2, d_b)).reshape(samples, -1)


def witness_form(rho: DenseOperator, psi: PureVector, alice=None) -> complex:
    """<psi|T_A(rho)|psi> with no normalization requirement on psi."""
    if sorted(psi.layout.ids) != sorted(rho.layout.ids):
        raise ValueError(f"layouts differ: rho on {rho.layout.ids}, psi on {psi.layout.ids}")
    rho = permute_registers(rho, psi.layout.ids)
    if rho.layout != psi.layout:
        raise ValueError("register dimensions of rho and psi differ")
    which = Party.ALICE if alice is None else alice
    return psi.expectation(partial_transpose(rho, which))


def evaluate_witness(rho: DenseOperator, psi: PureVector, alice=None, require_unit: bool = True) -> float:
    """<psi|T_A(rho)|psi> for a unit vector psi.

    ``rho`` is reordered to ``psi``'s register order first, so the two may
    use different orderings of the same registers.  ``alice`` overrides the
    party labels with an explicit set of register ids.
    """
    if require_unit and abs(psi.norm() - 1) > UNIT_TOL:
        raise ValueError(f"psi must be a unit vector, has norm {psi.norm():.12g}")
    value = witness_form(rho, psi, alice)
    if abs(value.imag) > IMAG_TOL:
        raise ArithmeticError(f"witness value has imaginary part {value.imag:.3e}; rho is not Hermitian")
    return float(value.real)


def canonical_phi(d: int) -> PureVector:
    """|1>_1 |2>_2 (|1>_3|1>_4 + |2>_3|2>_4), unnormalized, on registers 1..4."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    layout = RegisterLayout.uniform(d, (1, 2, 3, 4))
    return basis_vector(layout, (0, 1, 0, 0)) + basis_vector(layout, (0, 1, 1, 1))


@dataclass
class WitnessResult:
    best_value: float
    best_vector: PureVector
    restarts_used: int
    converged: bool
    value_history: list[float] = field(default_factory=list)
    seed: int | None = None
    alice: tuple[int, ...] = ()

    @property
    def certificate(self) -> PureVector | None:
        """The minimizing vector, only when it certifies a negative value."""
        return self.best_vector if self.best_value < 0 else None

    def to_dict(self) -> dict:
        cert = self.certificate
        return {
            "best_value": self.best_value,
            "negative": self.best_value < 0,
            "restarts": self.restarts_used,
            "converged": self.converged,
            "seed": self.seed,
            "certificate": None if cert is None else {
                "layout": cert.layout.to_dict(),
                "amplitudes": [[float(z.real), float(z.imag)] for z in cert.amplitudes],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Rank2Objective:
    """f(U) = min over c of <(U⊗I)c| M |(U⊗I)c>, for a d_A x 2 isometry U."""

    def __init__(self, m: np.ndarray, d_a: int, d_b: int):
        self.m4 = m.reshape(d_a, d_b, d_a, d_b)
        self.d_a, self.d_b = d_a, d_b

    def inner(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        comp = np.einsum("ai,abcd,cj->ibjd", u.conj(), self.m4, u, optimize=True)
        comp = comp.reshape(2 * self.d_b, 2 * self.d_b)
        w, v = np.linalg.eigh((comp + comp.conj().T) / 2)
        return float(w[0]), v[:, 0]

    def gradient(self, u: np.ndarray, c: np.ndarray) -> np.ndarray:
        cm = c.reshape(2, self.d_b)
        psi = u @ cm
        m_psi = np.einsum("abcd,cd->ab", self.m4, psi)
        g = 2 * m_psi @ cm.conj().T
        # project onto the tangent space of the Stiefel manifold
        return g - u @ ((u.conj().T @ g + g.conj().T @ u) / 2)


def _retract(u: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(u)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _descend(obj: _Rank2Objective, u: np.ndarray, max_iters: int, tol: float):
    value, c = obj.inner(u)
    history = [value]
    converged = False
    step = 1.0
    for _ in range(max_iters):
        g = obj.gradient(u, c)
        gnorm2 = float(np.real(np.vdot(g, g)))
        if gnorm2 < 1e-28:
            converged = True
            break
        t = min(1e6, 2 * step)
        while t > 1e-12:
            u_new = _retract(u - t * g)
            v_new, c_new = obj.inner(u_new)
            if v_new <= value - 1e-4 * t * gnorm2:
                break
            t /= 2
        else:
            converged = True
            break
        step = t
        improvement = value - v_new
        u, value, c = u_new, v_new, c_new
        history.append(value)
        if improvement < tol:
            converged = True
            break
    return value, u, c, history, converged


def search_rank2_min(m, d_a: int, d_b: int, restarts: int = 64, max_iters: int = 500,
                     tol: float = 1e-12, seed: int | None = None,
                     initial_isometries=(), workers: int = 1) -> WitnessResult:
    """Minimize <psi|M|psi> over unit psi of Schmidt rank <= 2.

    ``M`` is Hermitian and already partially transposed, with Alice's
    registers first so that it reshapes as (d_A, d_B, d_A, d_B).
    ``initial_isometries`` seed extra restarts ahead of the ``restarts``
    random ones; each random restart gets its own generator spawned from
    ``seed``, so the result does not depend on ``workers``.
    """
    if isinstance(m, DenseOperator):
        layout, mat = m.layout, m.matrix
        m.assert_hermitian(1e-10)
    else:
        mat = np.asarray(m, dtype=complex)
        layout = RegisterLayout.from_dims([d_a, d_b])
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("M is not Hermitian")
    if mat.shape != (d_a * d_b, d_a * d_b):
        raise ValueError(f"M has shape {mat.shape}, cut is {d_a} x {d_b}")
    if d_a < 2:
        raise ValueError("Alice's side needs dimension >= 2 for a rank-2 ansatz")
    obj = _Rank2Objective((mat + mat.conj().T) / 2, d_a, d_b)

    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 63)
    children = np.random.SeedSequence(seed).spawn(restarts)
    starts = [np.asarray(u, dtype=complex) for u in initial_isometries]
    starts += [random_isometry(np.random.Generator(np.random.Philox(s)), d_a) for s in children]

    def run(u0):
        return _descend(obj, _retract(u0), max_iters, tol)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(u) for u in starts]

    best = min(range(len(results)), key=lambda k: (results[k][0], k))
    value, u, c, history, _ = results[best]
    psi = (u @ c.reshape(2, d_b)).reshape(-1)
    vec = PureVector(psi, layout)
    exact = float(np.real(np.vdot(psi, mat @ psi)))
    return WitnessResult(
        best_value=exact,
        best_vector=vec,
        restarts_used=len(starts),
        converged=all(r[4] for r in results),
        value_history=history,
        seed=seed,
    )


def alice_first(op: DenseOperator) -> tuple[DenseOperator, int, int]:
    """Reorder ``op`` so Alice's registers come first; returns (op, d_A, d_B)."""
    alice = list(op.layout.party_ids(Party.ALICE))
    bob = list(op.layout.party_ids(Party.BOB))
    reordered = permute_registers(op, alice + bob)
    return reordered, op.layout.subset(alice).dim, op.layout.subset(bob).dim


def _support_isometry(v: PureVector, alice) -> np.ndarray | None:
    u, s, _ = np.linalg.svd(cut_matrix(v, alice))
    return u[:, :2] if u.shape[1] >= 2 else None


def find_witness(rho: DenseOperator, restarts: int = 64, seed: int | None = None,
                 max_iters: int = 500, tol: float = 1e-12, workers: int = 1,
                 budget: int = DEFAULT_DENSE_BUDGET) -> WitnessResult:
    """Search for a Schmidt-rank-2 psi with <psi|T_A(rho)|psi> < 0.

    The first restart is seeded with the Alice-side support of the
    canonical vector (four equal registers) or with the first two Alice
    basis vectors (any other layout).
    """
    if rho.dim > budget:
        raise BudgetExceeded(f"dense dimension {rho.dim} exceeds the dense budget {budget}")
    ordered, d_a, d_b = alice_first(rho)
    m = partial_transpose(ordered, Party.ALICE)
    alice = ordered.layout.party_ids(Party.ALICE)
    dims = set(rho.layout.dims)
    seeds = []
    if sorted(rho.layout.ids) == [1, 2, 3, 4] and len(dims) == 1:
        phi = permute_registers(canonical_phi(dims.pop()), ordered.layout.ids)
        seeds.append(_support_isometry(phi, alice))
    else:
        seeds.append(np.eye(d_a, 2))
    result = search_rank2_min(m, d_a, d_b, restarts=restarts, max_iters=max_iters, tol=tol,
                              seed=seed, initial_isometries=seeds, workers=workers)
    result.alice = tuple(alice)
    return result


@dataclass(frozen=True)
class BoundParams:
    d: int
    n: int
    epsilon: Fraction

    def __post_init__(self):
        if self.d < 3 or self.n < 1:
            raise ValueError(f"need d >= 3 and n >= 1, got d={self.d}, n={self.n}")
        eps = as_fraction(self.epsilon, "epsilon")
        if eps < 0:
            raise ValueError(f"epsilon must be nonnegative, got {eps}")
        object.__setattr__(self, "epsilon", eps)


def n_copy_bound(params: BoundParams) -> Fraction:
    """(lambda/4)^n (1 - 2/d)^{2n} - eps mu^{n-1}, exactly."""
    d, n, eps = params.d, params.n, params.epsilon
    ml = mu_lambda(d, eps)
    return (ml.lam / 4) ** n * (1 - Fraction(2, d)) ** (2 * n) - eps * ml.mu ** (n - 1)


def epsilon_threshold(d: int, n: int, precision=Fraction(1, 10 ** 6)) -> Fraction:
    """Exact bisection on [0, 1] for the largest eps at which the bound stays positive.

    Returns eps* with B(eps*) > 0 and B(eps* + precision) <= 0.
    """
    precision = as_fraction(precision, "precision")
    if precision <= 0:
        raise ValueError("precision must be positive")
    bound = lambda e: n_copy_bound(BoundParams(d, n, e))  # noqa: E731
    lo, hi = Fraction(0), Fraction(1)
    if bound(lo) <= 0:
        raise ArithmeticError(f"bound is not positive at eps = 0 for d={d}, n={n}")
    if bound(hi) > 0:
        raise ArithmeticError(f"bound is still positive at eps = 1 for d={d}, n={n}")
    while hi - lo > precision:
        mid = (lo + hi) / 2
        if bound(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def q_power(d: int, n: int, budget: int = DEFAULT_DENSE_BUDGET) -> DenseOperator:
    """Q^{⊗2n} on registers 1..4n, pairs (1,2), (3,4), ..."""
    dim = d ** (4 * n)
    if dim > budget:
        raise BudgetExceeded(f"dense dimension {dim} exceeds the dense budget {budget}")
    q = projector_set(d).Q
    return tensor(*(q.relabel({1: 2 * k + 1, 2: 2 * k + 2}) for k in range(2 * n)))


def q_overlap_min(d: int, n: int = 1, restarts: int = 64, seed: int | None = None,
                  budget: int = DEFAULT_DENSE_BUDGET, workers: int = 1) -> float:
    """Smallest <psi|Q^{⊗2n}|psi> the rank-2 search finds (an upper bound on the minimum)."""
    ordered, d_a, d_b = alice_first(q_power(d, n, budget))
    return search_rank2_min(ordered, d_a, d_b, restarts=restarts, seed=seed,
                            initial_isometries=[np.eye(d_a, 2)], workers=workers).best_value


def q_overlap_samples(d: int, n: int = 1, samples: int = 10_000, seed: int | None = None,
                      budget: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
    """<psi|Q^{⊗2n}|psi> at random unit Schmidt-rank-2 vectors."""
    ordered, d_a, d_b = alice_first(q_power(d, n, budget))
    rng = np.random.Generator(np.random.Philox(seed))
    psi = random_rank2_vectors(rng, d_a, d_b, samples)
    return np.real(np.einsum("si,ij,sj->s", psi.conj(), ordered.matrix, psi, optimize=True))


def lower_bound_report(d: int, n: int, epsilon) -> dict:
    eps = as_fraction(epsilon, "epsilon")
    b = n_copy_bound(BoundParams(d, n, eps))
    return {"d": d, "n": n, "epsilon": fraction_str(eps), "bound": fraction_str(b), "positive": b > 0}
