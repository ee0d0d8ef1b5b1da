import numpy as np
import pytest

from closedstring import jets as jz


def test_arithmetic_chain_rule():
    x = jz.Jet(np.array([2.0]), np.array([[1.0, 0.0]]))
    y = jz.Jet(np.array([3.0]), np.array([[0.0, 1.0]]))
    f = x * y + x / y - 2.0 * x
    # d/dx = y + 1/y - 2, d/dy = x - x/y^2
    assert np.allclose(jz.value(f), [2 * 3 + 2 / 3 - 4])
    assert np.allclose(f.tan[0], [3 + 1 / 3 - 2, 2 - 2 / 9])


def test_exp_and_conj_dispatch():
    z = jz.Jet(np.array([0.3 + 0.4j]), np.array([[1.0 + 0.0j]]))
    w = np.exp(z)
    assert np.allclose(w.val, np.exp(0.3 + 0.4j))
    assert np.allclose(w.tan[0], np.exp(0.3 + 0.4j))
    assert np.allclose(np.conj(z).tan[0], 1.0)  # real-parameter derivative commutes with conj


def test_matmul_product_rule():
    a = jz.Jet(np.array([[1.0, 2.0], [0.0, 1.0]]),
               np.zeros((2, 2, 1)))
    a.tan[0, 0, 0] = 1.0
    b = np.array([3.0, 4.0])
    out = a @ b
    assert np.allclose(out.val, [11.0, 4.0])
    assert np.allclose(out.tan[:, 0], [3.0, 0.0])


def test_fft_linearity():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(16)
    t = rng.standard_normal((16, 3))
    j = jz.Jet(v, t)
    out = jz.ifft(jz.fft(j))
    assert np.allclose(out.val, v)
    assert np.allclose(out.tan, t)


def test_mean_sum_and_indexing():
    j = jz.Jet(np.arange(6.0).reshape(3, 2), np.ones((3, 2, 4)))
    m = j.mean(axis=0)
    assert np.allclose(m.val, [2.0, 3.0])
    assert np.allclose(m.tan, 1.0)
    s = j[1:, 0]
    assert s.val.shape == (2,) and s.tan.shape == (2, 4)


def test_add_broadcasts_tangent_with_value():
    scalar = jz.Jet(np.asarray(2.0), np.array([1.0, 0.0]))
    out = scalar + np.arange(4.0)
    assert out.val.shape == (4,)
    assert out.tan.shape == (4, 2)
    assert np.allclose(out.tan[:, 0], 1.0)


def test_division_matches_finite_difference():
    h = 1e-7
    x0 = 1.7
    x = jz.Jet(np.array([x0]), np.array([[1.0]]))
    f = (2.0 + x) / (x * x - 0.5)
    num = ((2 + x0 + h) / ((x0 + h) ** 2 - 0.5) - (2 + x0 - h) / ((x0 - h) ** 2 - 0.5)) / (2 * h)
    assert np.allclose(f.tan[0, 0], num, rtol=1e-7)


def test_unsupported_ufunc_raises():
    j = jz.Jet(np.array([1.0]), np.array([[1.0]]))
    with pytest.raises(TypeError):
        np.sin(j)
