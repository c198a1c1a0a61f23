import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unstable_filter.linalg import SingularSystemError, solve_on_grid, solve_stack


def _random_stack(rng, n, k, m=None):
    a = rng.normal(size=(n, k, k)) + 1j * rng.normal(size=(n, k, k))
    shape = (n, k) if m is None else (n, k, m)
    b = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return a, b


@pytest.mark.parametrize("k", [1, 3, 6, 9])
def test_matches_numpy(backend, rng, k):
    a, b = _random_stack(rng, 200, k, 4)
    x = solve_stack(a, b, backend=backend)
    np.testing.assert_allclose(x, np.linalg.solve(a, b), rtol=1e-9, atol=1e-12)


def test_vector_rhs_shape(backend, rng):
    a, b = _random_stack(rng, 10, 3)
    x = solve_stack(a, b, backend=backend)
    assert x.shape == (10, 3)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", a, x), b, atol=1e-10)


def test_badly_scaled_rows(backend, rng):
    # rows spanning many decades, like the coupled optical/mechanical systems
    a, b = _random_stack(rng, 50, 5, 2)
    scales = 10.0 ** np.array([-6, 0, 4, 9, 14])
    a *= scales[None, :, None]
    b *= scales[None, :, None]
    x = solve_stack(a, b, backend=backend)
    np.testing.assert_allclose(x, np.linalg.solve(a, b), rtol=1e-7)


def test_singular_reports_index(backend, rng):
    a, b = _random_stack(rng, 5, 3)
    a[3, 2] = a[3, 0] * (2 - 1j)
    with pytest.raises(SingularSystemError) as err:
        solve_stack(a, b, backend=backend)
    assert err.value.index == 3


def test_zero_row_is_singular(backend):
    a = np.eye(3, dtype=complex)[None].repeat(2, axis=0)
    a[1, 1] = 0
    with pytest.raises(SingularSystemError) as err:
        solve_stack(a, np.ones((2, 3)), backend=backend)
    assert err.value.index == 1


def test_grid_error_names_frequency(backend):
    a = np.eye(2, dtype=complex)[None].repeat(3, axis=0)
    a[2] = 0
    grid = np.array([1.0, 2.0, 2 * np.pi * 50])
    with pytest.raises(SingularSystemError, match="f = 50 Hz"):
        solve_on_grid(a, np.ones((3, 2)), grid, backend=backend)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        solve_stack(np.eye(3)[None], np.ones((1, 2)))


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve_stack(np.eye(2)[None], np.ones((1, 2)), backend="fortran")


def test_backends_agree_exactly_enough(rng):
    from unstable_filter import linalg
    if not linalg.HAVE_EXTENSION:
        pytest.skip("extension not built")
    a, b = _random_stack(rng, 300, 9, 7)
    xc = solve_stack(a, b, backend="cython")
    xp = solve_stack(a, b, backend="python")
    np.testing.assert_allclose(xc, xp, rtol=1e-12, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(1, 7), seed=st.integers(0, 2**31 - 1),
       shift=st.floats(0.5, 50.0))
def test_diagonally_dominant_residual(k, seed, shift):
    rng = np.random.default_rng(seed)
    a, b = _random_stack(rng, 4, k)
    a += shift * k * np.eye(k)
    x = solve_stack(a, b)
    res = np.einsum("nij,nj->ni", a, x) - b
    assert np.abs(res).max() <= 1e-10 * max(1.0, np.abs(b).max())
