import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmcf import stencils

BACKENDS = ["numpy"] + (["cython"] if stencils.BACKEND == "cython" else [])


def periodic_sample(n, k=3):
    x = 2 * np.pi * np.arange(n) / n
    return x, np.sin(k * x)


@pytest.mark.parametrize("backend", BACKENDS)
def test_periodic_first_derivative_is_second_order(backend):
    errs = []
    for n in (32, 64, 128):
        x, f = periodic_sample(n)
        d = stencils.diff1(f, 0, 2 * np.pi / n, backend=backend)
        errs.append(np.max(np.abs(d - 3 * np.cos(3 * x))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.8) & (ratios < 4.2))


@pytest.mark.parametrize("backend", BACKENDS)
def test_periodic_second_derivative_is_second_order(backend):
    errs = []
    for n in (32, 64, 128):
        x, f = periodic_sample(n)
        d = stencils.diff2(f, 0, 2 * np.pi / n, backend=backend)
        errs.append(np.max(np.abs(d + 9 * np.sin(3 * x))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.8) & (ratios < 4.2))


@pytest.mark.parametrize("backend", BACKENDS)
def test_one_sided_edges_exact_on_quadratics(backend):
    x = np.linspace(0.0, 1.0, 11)
    h = x[1] - x[0]
    f = 3 * x ** 2 - 2 * x + 1
    assert np.allclose(stencils.diff1(f, 0, h, periodic=False, backend=backend), 6 * x - 2, atol=1e-12)
    assert np.allclose(stencils.diff2(f, 0, h, periodic=False, backend=backend), 6.0, atol=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_shift_makes_linear_growth_exact(backend):
    n, L = 16, 5.0
    z = L * np.arange(n) / n
    f = np.stack([z, np.zeros(n)], axis=-1)
    d1 = stencils.diff1(f, 0, L / n, shift=[L, 0.0], backend=backend)
    d2 = stencils.diff2(f, 0, L / n, shift=[L, 0.0], backend=backend)
    assert np.allclose(d1, [1.0, 0.0], atol=1e-13)
    assert np.allclose(d2, 0.0, atol=1e-10)


@given(st.integers(8, 40), st.integers(8, 20), st.integers(0, 1), st.booleans(), st.integers(0, 2 ** 31))
def test_backends_agree_bitwise(n0, n1, axis, periodic, seed):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    f = np.random.default_rng(seed).standard_normal((n0, n1, 3))
    shift = np.random.default_rng(seed + 1).standard_normal(3) if periodic else None
    h = 0.1
    for fn in (stencils.diff1, stencils.diff2):
        a = fn(f, axis, h, periodic, shift, backend="numpy")
        b = fn(f, axis, h, periodic, shift, backend="cython")
        assert np.array_equal(a, b)


@given(st.integers(8, 64), st.floats(-3, 3), st.floats(-3, 3))
def test_derivative_is_linear(n, a, b):
    rng = np.random.default_rng(n)
    f, g = rng.standard_normal(n), rng.standard_normal(n)
    h = 0.3
    lhs = stencils.diff1(a * f + b * g, 0, h)
    rhs = a * stencils.diff1(f, 0, h) + b * stencils.diff1(g, 0, h)
    assert np.allclose(lhs, rhs, atol=1e-11 * (1 + abs(a) + abs(b)) / h)


def test_unknown_compiled_backend_request_fails_cleanly(monkeypatch):
    monkeypatch.setattr(stencils, "_compiled", None)
    with pytest.raises(RuntimeError):
        stencils.diff1(np.zeros(8), 0, 1.0, backend="cython")
