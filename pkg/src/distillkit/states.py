"""The maximally entangled vector, the P/Q/R/S/F projectors and the state families.

Basis vectors are labelled 1..d in prose and 0..d-1 in arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._rational import as_fraction
from .tensor import (
    HERMITIAN_TOL,
    DenseOperator,
    PureVector,
    RegisterLayout,
    identity,
    partial_transpose,
    tensor,
)


def pair_layout(d: int, ids: tuple[int, int] = (1, 2)) -> RegisterLayout:
    return RegisterLayout.uniform(d, ids)


def _check_d(d: int, minimum: int = 2) -> None:
    if int(d) != d or d < minimum:
        raise ValueError(f"local dimension must be an integer >= {minimum}, got {d}")


def max_entangled(d: int, ids: tuple[int, int] = (1, 2)) -> PureVector:
    """(1/sqrt(d)) sum_i |i>|i>."""
    _check_d(d)
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return PureVector(v, pair_layout(d, ids))


def swap_matrix(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f


@dataclass(frozen=True)
class ProjectorSet:
    d: int
    P: DenseOperator
    Q: DenseOperator
    R: DenseOperator
    S: DenseOperator
    F: DenseOperator

    def invariant_errors(self) -> dict[str, float]:
        """Max entrywise deviation of every algebraic identity the set must satisfy."""
        d = self.d
        eye = identity(self.P.layout)
        zero = eye * 0
        checks = {
            "P^2=P": (self.P @ self.P, self.P),
            "Q^2=Q": (self.Q @ self.Q, self.Q),
            "R^2=R": (self.R @ self.R, self.R),
            "S^2=S": (self.S @ self.S, self.S),
            "P+Q=I": (self.P + self.Q, eye),
            "R+S=I": (self.R + self.S, eye),
            "PQ=0": (self.P @ self.Q, zero),
            "RS=0": (self.R @ self.S, zero),
            "F^2=I": (self.F @ self.F, eye),
        }
        errors = {k: a.max_abs_diff(b) for k, (a, b) in checks.items()}
        traces = {"tr P": (self.P, 1), "tr Q": (self.Q, d * d - 1),
                  "tr R": (self.R, d * (d - 1) / 2), "tr S": (self.S, d * (d + 1) / 2)}
        for k, (op, expected) in traces.items():
            errors[k] = abs(op.trace() - expected)
        return errors


def projector_set(d: int, ids: tuple[int, int] = (1, 2)) -> ProjectorSet:
    _check_d(d)
    layout = pair_layout(d, ids)
    phi = max_entangled(d, ids)
    P = phi.projector()
    eye = np.eye(d * d)
    F = swap_matrix(d)
    return ProjectorSet(
        d=d,
        P=P,
        Q=DenseOperator(eye - P.matrix, layout),
        R=DenseOperator((eye - F) / 2, layout),
        S=DenseOperator((eye + F) / 2, layout),
        F=DenseOperator(F, layout),
    )


@dataclass
class PTRelationReport:
    d: int
    deviations: dict[str, float]
    tol: float = HERMITIAN_TOL

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.deviations.values())


def pt_relation_rhs(ps: ProjectorSet) -> dict[str, DenseOperator]:
    """Right-hand sides of the four partial-transpose relations."""
    d = ps.d
    return {
        "T(P)": (-ps.R + ps.S) / d,
        "T(Q)": ((d + 1) * ps.R + (d - 1) * ps.S) / d,
        "T(R)": (-(d - 1) * ps.P + ps.Q) / 2,
        "T(S)": ((d + 1) * ps.P + ps.Q) / 2,
    }


def verify_pt_relations(d: int) -> PTRelationReport:
    """Compare dense partial transposes of P, Q, R, S with their closed forms.

    Failures are reported through the deviations, never raised.
    """
    ps = projector_set(d)
    rhs = pt_relation_rhs(ps)
    lhs = {"T(P)": ps.P, "T(Q)": ps.Q, "T(R)": ps.R, "T(S)": ps.S}
    devs = {k: partial_transpose(op).max_abs_diff(rhs[k]) for k, op in lhs.items()}
    return PTRelationReport(d, devs)


def pair_product(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    """a on registers (1,2) tensored with b moved onto registers (3,4)."""
    a = a.relabel(dict(zip(a.layout.ids, (1, 2))))
    b = b.relabel(dict(zip(b.layout.ids, (3, 4))))
    return tensor(a, b)


@dataclass(frozen=True)
class RhoEpsilonParams:
    d: int
    epsilon: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        _check_d(self.d, 3)
        eps = as_fraction(self.epsilon, "epsilon")
        if eps < 0:
            raise ValueError(f"epsilon must be nonnegative, got {eps}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def rr_coefficient(self) -> Fraction:
        return Fraction(self.d + 1) / (self.d - 1) + self.epsilon / (self.d - 1)


@dataclass(frozen=True)
class WernerParams:
    d: int
    alpha: float

    def __post_init__(self):
        _check_d(self.d)
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")


def alpha_state(d: int, alpha) -> DenseOperator:
    """alpha R_{1,2}⊗R_{3,4} + S_{1,2}⊗S_{3,4} (unnormalized)."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    ps = projector_set(d)
    return float(alpha) * pair_product(ps.R, ps.R) + pair_product(ps.S, ps.S)


def rho_epsilon(params: RhoEpsilonParams) -> DenseOperator:
    """The four-register state ((d+1+eps)/(d-1)) R⊗R + S⊗S."""
    return alpha_state(params.d, params.rr_coefficient)


def werner(params: WernerParams) -> DenseOperator:
    """S + alpha R on a single d⊗d pair, unnormalized."""
    ps = projector_set(params.d)
    return ps.S + float(params.alpha) * ps.R
