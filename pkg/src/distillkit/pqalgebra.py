"""Exact rational algebra on tensor words over the projectors P, Q, R, S.

A word such as ``("R", "S")`` stands for R_{1,2} ⊗ S_{3,4}: one symbol per
pair of registers, the odd register of each pair being Alice's.  Partial
transposition over Alice acts position-wise through the four closed-form
relations, so everything here is exact and never touches a matrix, except
:func:`to_dense`, which exists to cross-check against the dense code.

The spans of {P, Q} and {R, S} on a pair intersect only in multiples of
the identity, so words are never rewritten from one alphabet into the
other; two operators are compared term by term in whatever alphabet they
were built in, or through :func:`to_dense`.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from ._rational import as_fraction
from .states import projector_set
from .tensor import DenseOperator, RegisterLayout, tensor

SYMBOLS = ("P", "Q", "R", "S")
DEFAULT_TERM_BUDGET = 4 ** 12
DEFAULT_DENSE_BUDGET = 6561

Word = tuple[str, ...]


class BudgetExceeded(RuntimeError):
    """An expansion or dense realization would exceed its configured budget."""


class StructuredOperator:
    """Finite sum of rational multiples of tensor words, on local dimension ``d``."""

    __slots__ = ("d", "_terms", "_length")

    def __init__(self, d: int, terms: Mapping[Iterable[str], object] | None = None):
        self.d = int(d)
        clean: dict[Word, Fraction] = {}
        length = None
        for word, c in (terms or {}).items():
            word = tuple(word)
            if not word:
                raise ValueError("words must be nonempty")
            bad = [s for s in word if s not in SYMBOLS]
            if bad:
                raise ValueError(f"unknown symbols {bad} in word {word}")
            if length is None:
                length = len(word)
            elif len(word) != length:
                raise ValueError(f"word {word} has length {len(word)}, expected {length}")
            c = as_fraction(c, "coefficient")
            if c:
                clean[word] = clean.get(word, Fraction(0)) + c
        self._terms = {w: c for w, c in clean.items() if c}
        self._length = length

    @classmethod
    def word(cls, d: int, symbols: Iterable[str] | str, coeff=1) -> "StructuredOperator":
        return cls(d, {tuple(symbols): coeff})

    @property
    def terms(self) -> dict[Word, Fraction]:
        return dict(self._terms)

    @property
    def length(self) -> int | None:
        """Word length, or None for the zero operator."""
        return self._length if self._terms else None

    def coefficient(self, word: Iterable[str] | str) -> Fraction:
        return self._terms.get(tuple(word), Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, StructuredOperator):
            return NotImplemented
        return self.d == other.d and self._terms == other._terms

    def __repr__(self) -> str:
        body = " + ".join(f"({c})·{''.join(w)}" for w, c in sorted(self._terms.items()))
        return f"StructuredOperator(d={self.d}, {body or '0'})"

    def _check_compatible(self, other: "StructuredOperator") -> None:
        if self.d != other.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        if self.length and other.length and self.length != other.length:
            raise ValueError(f"word length mismatch: {self.length} vs {other.length}")

    def __add__(self, other: "StructuredOperator") -> "StructuredOperator":
        self._check_compatible(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, Fraction(0)) + c
        return StructuredOperator(self.d, out)

    def __neg__(self) -> "StructuredOperator":
        return StructuredOperator(self.d, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "StructuredOperator") -> "StructuredOperator":
        return self + (-other)

    def __mul__(self, scalar) -> "StructuredOperator":
        s = as_fraction(scalar, "scalar")
        return StructuredOperator(self.d, {w: s * c for w, c in self._terms.items()})

    __rmul__ = __mul__

    def tensor(self, other: "StructuredOperator", budget: int = DEFAULT_TERM_BUDGET) -> "StructuredOperator":
        if self.d != other.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        if len(self) * len(other) > budget:
            raise BudgetExceeded(f"tensor product needs {len(self) * len(other)} terms; term budget is {budget}")
        out: dict[Word, Fraction] = {}
        for (w1, c1), (w2, c2) in itertools.product(self._terms.items(), other._terms.items()):
            out[w1 + w2] = c1 * c2
        return StructuredOperator(self.d, out)


def pt_rules(d: int) -> dict[str, dict[str, Fraction]]:
    """Partial transpose of each symbol as a rational combination of symbols."""
    d = Fraction(d)
    return {
        "P": {"R": -1 / d, "S": 1 / d},
        "Q": {"R": (d + 1) / d, "S": (d - 1) / d},
        "R": {"P": -(d - 1) / 2, "Q": Fraction(1, 2)},
        "S": {"P": (d + 1) / 2, "Q": Fraction(1, 2)},
    }


def pt_substitute(op: StructuredOperator) -> StructuredOperator:
    """Exact partial transpose over Alice, applied position by position."""
    rules = pt_rules(op.d)
    out: dict[Word, Fraction] = {}
    for word, c in op:
        for choice in itertools.product(*(rules[s].items() for s in word)):
            coeff = c
            for _, k in choice:
                coeff *= k
            new = tuple(s for s, _ in choice)
            out[new] = out.get(new, Fraction(0)) + coeff
    return StructuredOperator(op.d, out)


def tensor_power(op: StructuredOperator, n: int, budget: int = DEFAULT_TERM_BUDGET) -> StructuredOperator:
    if n < 1:
        raise ValueError(f"tensor power needs n >= 1, got {n}")
    if len(op) ** n > budget:
        raise BudgetExceeded(f"{len(op)}**{n} = {len(op) ** n} terms exceeds the term budget {budget}")
    result = op
    for _ in range(n - 1):
        result = result.tensor(op, budget)
    return result


def symbol_trace(d: int, s: str) -> Fraction:
    return {"P": Fraction(1), "Q": Fraction(d * d - 1),
            "R": Fraction(d * (d - 1), 2), "S": Fraction(d * (d + 1), 2)}[s]


def trace(op: StructuredOperator) -> Fraction:
    total = Fraction(0)
    for word, c in op:
        t = c
        for s in word:
            t *= symbol_trace(op.d, s)
        total += t
    return total


def to_dense(op: StructuredOperator, budget: int = DEFAULT_DENSE_BUDGET) -> DenseOperator:
    """Realize ``op`` as a matrix on registers 1..2L (pairs (1,2), (3,4), ...)."""
    d = op.d
    length = op.length or 1
    dim = d ** (2 * length)
    if dim > budget:
        raise BudgetExceeded(f"dense dimension {dim} exceeds the dense budget {budget}")
    ps = projector_set(d)
    mats = {"P": ps.P, "Q": ps.Q, "R": ps.R, "S": ps.S}
    layout = RegisterLayout.uniform(d, range(1, 2 * length + 1))
    total = DenseOperator(np.zeros((dim, dim)), layout)
    for word, c in op:
        factors = [mats[s].relabel({1: 2 * k + 1, 2: 2 * k + 2}) for k, s in enumerate(word)]
        total = total + float(c) * tensor(*factors)
    return total


@dataclass(frozen=True)
class MuLambda:
    mu: Fraction
    lam: Fraction


def _check_d_eps(d: int, epsilon) -> Fraction:
    if int(d) != d or d < 3:
        raise ValueError(f"d must be an integer >= 3, got {d}")
    eps = as_fraction(epsilon, "epsilon")
    if eps < 0:
        raise ValueError(f"epsilon must be nonnegative, got {eps}")
    return eps


def mu_lambda(d: int, epsilon) -> MuLambda:
    """mu = (d+1)^2 + (d+1+eps)(d-1) and lambda = 1 + (d+1+eps)/(d-1)."""
    eps = _check_d_eps(d, epsilon)
    beta = (d + 1 + eps) / (d - 1)
    return MuLambda(mu=(d + 1) ** 2 + (d + 1 + eps) * (d - 1), lam=1 + beta)


def rho_epsilon_words(d: int, epsilon) -> StructuredOperator:
    eps = _check_d_eps(d, epsilon)
    return StructuredOperator(d, {("R", "R"): (d + 1 + eps) / (d - 1), ("S", "S"): 1})


def pt_rho_closed_form(d: int, epsilon) -> StructuredOperator:
    """(1/4)(mu PP - eps PQ - eps QP + lambda QQ)."""
    eps = _check_d_eps(d, epsilon)
    ml = mu_lambda(d, eps)
    q = Fraction(1, 4)
    return StructuredOperator(d, {("P", "P"): q * ml.mu, ("P", "Q"): -q * eps,
                                  ("Q", "P"): -q * eps, ("Q", "Q"): q * ml.lam})


def _bits(word: Word) -> str:
    return "".join("0" if s == "P" else "1" for s in word)


def n_copy_pt_coeffs(d: int, epsilon, n: int, budget: int = DEFAULT_TERM_BUDGET) -> dict[str, Fraction]:
    """Coefficients alpha(x) of (T_A rho(eps))^{⊗n} = 4^{-n} sum_x alpha(x) Pi_x.

    Keys are bit strings of length 2n, 0 for P and 1 for Q.  Words whose
    coefficient vanishes (possible at eps = 0) are still listed, with 0.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if 4 ** n > budget:
        raise BudgetExceeded(f"4**{n} coefficients exceed the coefficient budget {budget}")
    base = pt_substitute(rho_epsilon_words(d, epsilon))
    power = tensor_power(base, n, budget)
    scale = Fraction(4) ** n
    coeffs = {"".join(bits): Fraction(0) for bits in itertools.product("01", repeat=2 * n)}
    for word, c in power:
        coeffs[_bits(word)] = scale * c
    return coeffs


@dataclass
class CoefficientClaims:
    """Exact checks of the n-copy coefficient statements for one (d, eps, n)."""

    d: int
    epsilon: Fraction
    n: int
    all_zeros_equals_mu_n: bool
    all_ones_equals_lambda_n: bool
    bound: Fraction
    words_checked: int
    # words other than 0^{2n}, 1^{2n} with |alpha(x)| > eps mu^{n-1}
    bound_violations: list[str]
    # the same, restricted to negative coefficients
    negative_bound_violations: list[str]
    # words containing a mixed pair (01 or 10) with nonzero coefficient
    mixed_pair_nonzero: list[str]

    @property
    def literal_claims_hold(self) -> bool:
        return self.all_zeros_equals_mu_n and self.all_ones_equals_lambda_n and not self.bound_violations

    @property
    def negative_claims_hold(self) -> bool:
        return self.all_zeros_equals_mu_n and self.all_ones_equals_lambda_n and not self.negative_bound_violations


def check_coefficient_claims(d: int, epsilon, n: int, budget: int = DEFAULT_TERM_BUDGET) -> CoefficientClaims:
    eps = _check_d_eps(d, epsilon)
    coeffs = n_copy_pt_coeffs(d, eps, n, budget)
    ml = mu_lambda(d, eps)
    bound = eps * ml.mu ** (n - 1)
    zeros, ones = "0" * (2 * n), "1" * (2 * n)
    violations, neg_violations, mixed = [], [], []
    for x, a in coeffs.items():
        if any(x[2 * k] != x[2 * k + 1] for k in range(n)) and a != 0:
            mixed.append(x)
        if x in (zeros, ones):
            continue
        if abs(a) > bound:
            violations.append(x)
            if a < 0:
                neg_violations.append(x)
    return CoefficientClaims(
        d=d, epsilon=eps, n=n,
        all_zeros_equals_mu_n=coeffs[zeros] == ml.mu ** n,
        all_ones_equals_lambda_n=coeffs[ones] == ml.lam ** n,
        bound=bound,
        words_checked=len(coeffs) - 2,
        bound_violations=violations,
        negative_bound_violations=neg_violations,
        mixed_pair_nonzero=mixed,
    )


def coeffs_to_json(coeffs: Mapping[str, Fraction]) -> str:
    return json.dumps([{"x": x, "num": str(c.numerator), "den": str(c.denominator)}
                       for x, c in sorted(coeffs.items())])


def coeffs_from_json(text: str) -> dict[str, Fraction]:
    return {e["x"]: Fraction(int(e["num"]), int(e["den"])) for e in json.loads(text)}
