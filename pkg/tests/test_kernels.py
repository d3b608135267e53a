import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labopt.errors import InvalidArgumentError
from labopt.kernels import KernelFamily, kernel_eval

import reference as ref

SE = KernelFamily("SquaredExponential")
PE1 = KernelFamily("PowerExponential", p=1.0)
MAT = [KernelFamily("Matern", nu=v) for v in (0.5, 1.5, 2.5)]


def test_se_identity_point():
    assert kernel_eval(SE, [0.0], 1.0, [0.3], [0.3]) == 1.0


def test_se_direct_value():
    got = kernel_eval(SE, [0.0], 2.0, [0.0], [1.0])
    assert got == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)


def test_power_exponential_direct_value():
    got = kernel_eval(PE1, [0.0], 1.0, [0.0], [2.0])
    assert got == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_power_exponential_uses_absolute_difference():
    k = KernelFamily("PowerExponential", p=1.3)
    a = kernel_eval(k, [0.5], 1.0, [0.2], [0.9])
    b = kernel_eval(k, [0.5], 1.0, [0.9], [0.2])
    assert a == b
    assert math.isfinite(a)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_matern_closed_form_matches_bessel(nu):
    # closed forms vs direct Bessel-function evaluation at random distances
    rng = np.random.default_rng(42)
    k = KernelFamily("Matern", nu=nu)
    for _ in range(20):
        x = rng.uniform(0, 1, size=2)
        x2 = rng.uniform(0, 1, size=2)
        om = rng.uniform(-2, 2, size=2)
        want = ref.corr_matern_bessel(x, x2, om, nu)
        got = kernel_eval(k, om, 1.0, x, x2)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-12)


@given(
    x=st.lists(st.floats(0, 1), min_size=2, max_size=2),
    x2=st.lists(st.floats(0, 1), min_size=2, max_size=2),
    om=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
)
@settings(max_examples=60, deadline=None)
def test_symmetry_and_unit_diagonal(x, x2, om):
    for k in (SE, PE1, *MAT):
        assert kernel_eval(k, om, 1.0, x, x2) == pytest.approx(
            kernel_eval(k, om, 1.0, x2, x), rel=1e-12)
        assert kernel_eval(k, om, 1.0, x, x) == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= kernel_eval(k, om, 1.0, x, x2) <= 1.0 + 1e-12


def test_psd_on_random_point_sets():
    # Cholesky with tiny jitter must succeed for every family
    rng = np.random.default_rng(2024)
    from labopt.backend import corr_matrix
    fams = [(0, 0.0), (1, 0.7), (1, 2.0), (2, 0.5), (2, 1.5), (2, 2.5)]
    for trial in range(50):
        n = int(rng.integers(3, 25))
        d = int(rng.integers(1, 3))
        X = rng.random((n, d))
        om = rng.uniform(-4, 4, size=d)
        code, shape = fams[trial % len(fams)]
        R = corr_matrix(code, shape, X, om)
        np.linalg.cholesky(R + 1e-10 * np.eye(n))


def test_rejects_non_finite_inputs():
    with pytest.raises(InvalidArgumentError):
        kernel_eval(SE, [0.0], 1.0, [np.nan], [0.0])
    with pytest.raises(InvalidArgumentError):
        kernel_eval(SE, [np.inf], 1.0, [0.0], [1.0])


def test_shape_parameter_validation():
    with pytest.raises(InvalidArgumentError):
        KernelFamily("PowerExponential", p=2.5)
    with pytest.raises(InvalidArgumentError):
        KernelFamily("Matern", nu=1.0)
    with pytest.raises(InvalidArgumentError):
        KernelFamily("SquaredExponential", p=1.0)
    with pytest.raises(InvalidArgumentError):
        KernelFamily("Gaussian")


def test_free_shapes_are_marked_and_guarded():
    free_p = KernelFamily("PowerExponential")
    free_nu = KernelFamily("Matern")
    assert free_p.is_free and free_nu.is_free
    assert not SE.is_free and not MAT[0].is_free
    with pytest.raises(InvalidArgumentError):
        _ = free_p.shape
    with pytest.raises(InvalidArgumentError):
        kernel_eval(free_nu, [0.0], 1.0, [0.0], [0.5])
