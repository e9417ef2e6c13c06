import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import study_design, random_spd
from gmdreg.errors import UnsupportedMeasureError, ValidationError
from gmdreg.objective import (
    IntegratingMeasure,
    RegressionData,
    dispersion,
    dispersion_kernel,
    dispersion_lebesgue,
    dispersion_quadrature,
    lebesgue_from_residuals,
    make_context,
    transformed_residuals,
    u_process,
)
from gmdreg.transforms import make_transform
from oracles import event_driven_integral, riemann_integral, u_direct


def _ctx(rng, n=8, p=2, kind="symmetric", measure=None, beta=None, noise=3.0):
    X = study_design(rng, n, p) if p > 1 else np.ones((n, 1))
    beta = np.zeros(p) if beta is None else beta
    y = X @ beta + rng.normal(0, noise, n)
    Q = make_transform(kind, random_spd(rng, n, cond=5.0))
    return make_context(RegressionData(X, y), Q, measure)


def test_single_observation_hand_values():
    # n=1 is below the n>p contract of RegressionData; exercise the kernel pieces directly
    D = np.ones((1, 1))
    assert lebesgue_from_residuals(np.array([0.5]), D) == pytest.approx(1.0)
    assert lebesgue_from_residuals(np.array([-3.0]), D) == pytest.approx(6.0)
    e = np.array([0.5])
    for y, expected in [(-0.6, 0), (-0.5, 0), (-0.49, -1), (0.0, -1), (0.49, -1), (0.5, 0), (1.0, 0)]:
        assert u_direct(e, D, y)[0] == expected


def test_u_process_sign_convention(rng):
    X = np.ones((3, 1))
    data = RegressionData(X, np.array([0.5, 0.5, 0.5]))
    ctx = make_context(data, np.eye(3))
    d = ctx.weights.D[:, 0].sum()
    assert u_process(ctx, [0.0], -0.5)[0] == pytest.approx(0.0)  # neither indicator at y = -e
    assert u_process(ctx, [0.0], -0.49)[0] == pytest.approx(-d)
    assert u_process(ctx, [0.0], 0.49)[0] == pytest.approx(-d)
    assert u_process(ctx, [0.0], 0.5)[0] == pytest.approx(0.0)  # e <= y turns on at y = e
    assert u_process(ctx, [0.0], -0.51)[0] == pytest.approx(0.0)
    # zero residuals: both indicators are 1 for y = 1
    zero = make_context(RegressionData(X, np.zeros(3)), np.eye(3))
    assert np.all(u_process(zero, [0.0], 1.0) == 0)


def test_u_process_antisymmetry(rng):
    ctx = _ctx(rng)
    b = np.array([0.3, -0.1])
    flipped = make_context(RegressionData(ctx.data.X, 2 * ctx.data.X @ b - ctx.data.y), ctx.weights.Q)
    e = transformed_residuals(ctx, b)
    ys = np.linspace(-5, 5, 97)
    ys = ys[~np.isin(np.round(ys, 12), np.round(np.concatenate([e, -e]), 12))]
    np.testing.assert_allclose(u_process(flipped, b, ys), -u_process(ctx, b, ys), atol=1e-12)


def test_u_process_vectorised_matches_direct(rng):
    ctx = _ctx(rng, n=10, p=3)
    b = np.array([0.1, 0.0, -0.2])
    e = transformed_residuals(ctx, b)
    for y in np.linspace(-8, 8, 33):
        np.testing.assert_allclose(u_process(ctx, b, y), u_direct(e, ctx.weights.D, y), atol=1e-12)


def test_transformed_residuals(rng):
    ctx = _ctx(rng, n=12, p=3)
    b = rng.normal(size=3)
    direct = ctx.weights.Q @ (ctx.data.y - ctx.data.X @ b)
    np.testing.assert_allclose(transformed_residuals(ctx, b), direct, atol=1e-12)
    ident = make_context(ctx.data, np.eye(12))
    np.testing.assert_allclose(transformed_residuals(ident, b), ctx.data.y - ctx.data.X @ b, atol=1e-12)
    X = ctx.data.X
    exact = make_context(RegressionData(X, X @ b), np.eye(12))
    np.testing.assert_allclose(transformed_residuals(exact, b), 0.0, atol=1e-10)


def test_closed_form_matches_oracles(rng):
    ctx = _ctx(rng, n=8, p=2)
    b = np.array([0.2, -0.05])
    e = transformed_residuals(ctx, b)
    exact = event_driven_integral(e, ctx.weights.D)
    assert dispersion_lebesgue(ctx, b) == pytest.approx(exact, abs=1e-10)
    assert dispersion_kernel(ctx, b) == pytest.approx(exact, abs=1e-10)
    # left Riemann sum of a step function: error is O(step) per breakpoint
    assert dispersion_lebesgue(ctx, b) == pytest.approx(riemann_integral(e, ctx.weights.D, 1e-3), rel=1e-3)
    assert dispersion_lebesgue(ctx, b) == pytest.approx(riemann_integral(e, ctx.weights.D, 2e-5), rel=1e-4)


def test_kernel_identity_numeric():
    # int g_a g_c dy = |a+c| - |a-c| with g_a(y) = I(a <= y) - I(-a < y)
    one = np.ones((1, 1))
    for a, c in [(1.0, 2.0), (-1.5, 0.7), (3.0, -3.0), (0.0, 2.0), (-2.0, -0.5)]:
        D = np.ones((2, 1))
        both = event_driven_integral(np.array([a, c]), D)
        sq_a = event_driven_integral(np.array([a]), one)
        sq_c = event_driven_integral(np.array([c]), one)
        cross = 0.5 * (both - sq_a - sq_c)
        assert cross == pytest.approx(abs(a + c) - abs(a - c), abs=1e-12)
        assert cross == pytest.approx(2 * np.sign(a * c) * min(abs(a), abs(c)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 12), p=st.integers(1, 3))
def test_closed_form_equals_event_driven(seed, n, p):
    rng = np.random.default_rng(seed)
    D = np.linalg.qr(rng.standard_normal((n, p)))[0]
    e = rng.uniform(-10, 10, n)
    assert lebesgue_from_residuals(e, D) == pytest.approx(event_driven_integral(e, D), abs=1e-10)
    assert lebesgue_from_residuals(e, D) >= -1e-9


def test_zero_residuals_give_zero(rng):
    X = study_design(rng, 10, 3)
    b = np.array([1.0, 2.0, 3.0])
    ctx = make_context(RegressionData(X, X @ b), np.eye(10))
    assert dispersion_lebesgue(ctx, b) == pytest.approx(0.0, abs=1e-9)


def test_sign_flip_and_translation(rng):
    ctx = _ctx(rng, n=15, p=3)
    X, y, Q = ctx.data.X, ctx.data.y, ctx.weights.Q
    b = np.array([0.4, -0.02, 0.01])
    base = dispersion_lebesgue(ctx, b)
    flipped = make_context(RegressionData(X, 2 * X @ b - y), Q)
    assert dispersion_lebesgue(flipped, b) == pytest.approx(base, rel=1e-12)
    c = np.array([5.0, -1.0, 0.25])
    shifted = make_context(RegressionData(X, y + X @ c), Q)
    assert dispersion_lebesgue(shifted, b + c) == pytest.approx(base, rel=1e-9)


def test_continuity_along_a_line(rng):
    ctx = _ctx(rng, n=10, p=2)
    d = np.array([1.0, 0.01])
    coarse = np.array([dispersion_lebesgue(ctx, t * d) for t in np.linspace(-2, 2, 2001)])
    fine = np.array([dispersion_lebesgue(ctx, t * d) for t in np.linspace(-2, 2, 4001)])
    assert np.all(np.isfinite(fine))
    # a jump would not shrink with the step; a Lipschitz function's increments halve
    ratio = np.abs(np.diff(fine)).max() / np.abs(np.diff(coarse)).max()
    assert 0.4 < ratio < 0.6


def test_degenerate_measure_hand_value():
    data = RegressionData(np.ones((3, 1)), np.array([1.0, -1.0, 0.5]))
    ctx = make_context(data, np.eye(3), IntegratingMeasure.degenerate_at_zero())
    d = ctx.weights.D[:, 0]
    s = np.where(data.y > 0, -1.0, 1.0)
    assert dispersion_quadrature(ctx, [0.0]) == pytest.approx(float(d @ s) ** 2)


def test_degenerate_measure_two_point_example():
    data = RegressionData(np.ones((2, 1)), np.array([1.0, -1.0]))
    ctx = make_context(data, np.eye(2), IntegratingMeasure.degenerate_at_zero())
    np.testing.assert_allclose(ctx.weights.D[:, 0], [1 / np.sqrt(2)] * 2)
    assert dispersion_quadrature(ctx, [0.0]) == pytest.approx(0.0, abs=1e-15)


def test_far_atom_contributes_nothing(rng):
    ctx = _ctx(rng, n=8, p=2, measure=IntegratingMeasure.symmetric_discrete([1e6], [1.0]))
    assert dispersion_quadrature(ctx, np.zeros(2)) == pytest.approx(0.0, abs=1e-24)


def test_grid_measure_converges_to_lebesgue(rng):
    ctx = _ctx(rng, n=8, p=2)
    b = np.array([0.1, 0.02])
    target = dispersion_lebesgue(ctx, b)
    extent = np.abs(transformed_residuals(ctx, b)).max() + 1
    errs = []
    for step in (0.1, 0.01, 0.001):
        g = make_context(ctx.data, ctx.weights.Q, IntegratingMeasure.grid(step, extent))
        errs.append(abs(dispersion_quadrature(g, b) - target))
    assert errs[2] < errs[0]
    assert errs[2] < 1e-2 * max(target, 1.0)


def test_dispatch_and_errors(rng):
    ctx = _ctx(rng)
    assert dispersion(ctx, np.zeros(2)) == dispersion_lebesgue(ctx, np.zeros(2))
    with pytest.raises(UnsupportedMeasureError):
        dispersion_quadrature(ctx, np.zeros(2))
    with pytest.raises(ValidationError):
        IntegratingMeasure.symmetric_discrete([], [])
    with pytest.raises(ValidationError):
        IntegratingMeasure.symmetric_discrete([-1.0], [1.0])
    dctx = make_context(ctx.data, ctx.weights.Q, IntegratingMeasure.degenerate_at_zero())
    with pytest.raises(UnsupportedMeasureError):
        dispersion_lebesgue(dctx, np.zeros(2))


def test_dstar_trace(rng):
    ctx = _ctx(rng, n=12, p=3)
    assert np.trace(ctx.dstar) == pytest.approx(3.0, abs=1e-10)
    assert np.abs(ctx.dstar - ctx.dstar.T).max() < 1e-14


def test_regression_data_validation():
    with pytest.raises(ValidationError):
        RegressionData(np.ones((3, 3)), np.ones(3))
    with pytest.raises(ValidationError):
        RegressionData(np.ones((4, 1)), np.ones(3))


def test_grid_quadrature_matches_literal_indicators(rng):
    ctx = _ctx(rng, n=9, p=3, measure=IntegratingMeasure.symmetric_discrete([0.3, 1.7, 4.0], [0.5, 1.0, 2.0], 0.25))
    b = np.array([0.2, -0.01, 0.03])
    e = transformed_residuals(ctx, b)
    locs, mass = ctx.measure.atoms()
    expected = sum(m * float(u_direct(e, ctx.weights.D, y) @ u_direct(e, ctx.weights.D, y)) for y, m in zip(locs, mass))
    assert dispersion_quadrature(ctx, b) == pytest.approx(expected, rel=1e-12)
