import itertools

import numpy as np
import pytest

from distillkit.tensor import DenseOperator, RegisterLayout


def loop_partial_transpose(m: np.ndarray, dims, transposed_axes) -> np.ndarray:
    """Entry-by-entry partial transpose, sharing no code with the library."""
    out = np.zeros_like(m)
    ranges = [range(d) for d in dims]
    for row in itertools.product(*ranges):
        for col in itertools.product(*ranges):
            r2, c2 = list(row), list(col)
            for k in transposed_axes:
                r2[k], c2[k] = col[k], row[k]
            i = np.ravel_multi_index(row, dims)
            j = np.ravel_multi_index(col, dims)
            out[np.ravel_multi_index(r2, dims), np.ravel_multi_index(c2, dims)] = m[i, j]
    return out


def loop_partial_trace(m: np.ndarray, dims, traced_axes) -> np.ndarray:
    keep = [k for k in range(len(dims)) if k not in traced_axes]
    kdims = [dims[k] for k in keep]
    tdims = [dims[k] for k in traced_axes]
    out = np.zeros((int(np.prod(kdims)),) * 2, dtype=complex)
    for kr in itertools.product(*[range(d) for d in kdims]):
        for kc in itertools.product(*[range(d) for d in kdims]):
            total = 0
            for t in itertools.product(*[range(d) for d in tdims]):
                row, col = [0] * len(dims), [0] * len(dims)
                for a, k in enumerate(keep):
                    row[k], col[k] = kr[a], kc[a]
                for a, k in enumerate(traced_axes):
                    row[k] = col[k] = t[a]
                total += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
            out[np.ravel_multi_index(kr, kdims), np.ravel_multi_index(kc, kdims)] = total
    return out


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20040429)


def random_operator(rng, dims, ids=None) -> DenseOperator:
    layout = RegisterLayout.from_dims(dims, ids)
    return DenseOperator(random_hermitian(rng, layout.dim), layout)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
