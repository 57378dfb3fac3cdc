import numpy as np
import pytest

from weyl_atlas import _backend, _pykernels

try:
    from weyl_atlas import _ckernels
except ImportError:  # pure-Python install
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def random_skew(rng, n, batch=None):
    shape = (n, n) if batch is None else (batch, n, n)
    M = rng.standard_normal(shape)
    return M - np.swapaxes(M, -1, -2)


def test_backend_name_is_known():
    assert _backend.NAME in ("cython", "python")


@pytest.mark.parametrize("coeffs,expected", [
    ([0, -3, 0, 1], 3),
    ([0, 0, 1], 1),
    ([2, -3, 0, 1], 2),
    ([1, 0, 1], 0),
    ([-1, 0, 0, 0, 1], 2),
    ([0, 0, 0, 0, 0, 1], 1),
    ([5.0], 0),
])
def test_python_root_counts(coeffs, expected):
    assert _pykernels.distinct_real_root_count(coeffs, 1e-12) == expected


def test_zero_polynomial_flagged():
    assert _pykernels.distinct_real_root_count([0, 0, 0], 1e-12) == -1


@needs_c
def test_backends_agree_on_random_quartics(rng):
    c = rng.uniform(-2, 2, (5000, 5))
    c[:, 4] = 1.0
    a = _ckernels.count_real_roots_batch(c, 1e-12)
    b = _pykernels.count_real_roots_batch(c, 1e-12)
    np.testing.assert_array_equal(a, b)


@needs_c
def test_backends_agree_on_pfaffians(rng):
    A = random_skew(rng, 12, 200)
    a = _ckernels.pfaffian_batch(A)
    b = _pykernels.pfaffian_batch(A)
    np.testing.assert_allclose(a, b, rtol=1e-9)


@needs_c
def test_c_kernel_rejects_large_degree():
    with pytest.raises(ValueError, match="unsupported degree"):
        _ckernels.count_real_roots_batch(np.ones((1, 20)), 1e-12)


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_pfaffian_small_cases(impl):
    a, b, c, d, e, f = 1.5, -2.0, 0.7, 3.0, -1.1, 0.4
    A = np.array([[0, a, b, c], [-a, 0, d, e], [-b, -d, 0, f], [-c, -e, -f, 0]], float)
    assert impl.pfaffian_batch(A[None])[0] == pytest.approx(a * f - b * e + c * d, rel=1e-13)
    assert impl.pfaffian_batch(np.array([[[0, 2.5], [-2.5, 0]]]))[0] == pytest.approx(2.5)
    assert impl.pfaffian_batch(np.zeros((1, 0, 0)))[0] == 1.0


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_pfaffian_squared_is_determinant(impl, rng):
    A = random_skew(rng, 10, 50)
    pf = impl.pfaffian_batch(A)
    np.testing.assert_allclose(pf ** 2, np.linalg.det(A), rtol=1e-9)


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_pfaffian_rejects_odd_dimension(impl):
    with pytest.raises(ValueError):
        impl.pfaffian_batch(np.zeros((1, 3, 3)))
