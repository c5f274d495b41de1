import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynquad.algebra import rs_rational
from dynquad.classical import (
    ClassicalRSet,
    ConvergenceError,
    InsufficientDataError,
    classical_quartet_residuals,
    cm_r_matrix,
    constraint_residuals,
    leading_order,
    partials_residual,
    pb_form_iii_residual,
    rs_hyperbolic,
    rs_rational_classical,
    scaling_slope,
    truncated_set,
    zero_set,
)
from dynquad.dynamical import DynamicalOperator, sample_lambda
from dynquad.tensor import TensorOperator, casimir, rel_residual, swap

import oracles


def q_samples(n, count, seed=0):
    rng = np.random.default_rng(seed)
    return [sample_lambda(rng, n, 0.0, None, 0.05, 0) for _ in range(count)]


def test_hyperbolic_u_entry():
    # d = −u − w − C and w, C contribute 0 and 1 at this position
    dm = rs_hyperbolic(2).matrices([1.0, 0.0])["d"].data
    u = -dm[1, 2] - 1.0
    assert u == pytest.approx(-1.0 / np.tanh(1.0), abs=1e-14)
    assert u == pytest.approx(-1.3130, abs=1e-4)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_hyperbolic_constraints(n):
    for q in q_samples(n, 10, seed=n):
        fit = constraint_residuals(rs_hyperbolic(n), q)
        assert abs(fit.alpha_a + 2) <= 1e-10 and abs(fit.alpha_d + 2) <= 1e-10
        assert max(fit.residuals) <= 1e-12
        assert fit.alphas_agree


def test_rational_constraints():
    for q in q_samples(3, 10):
        fit = constraint_residuals(rs_rational_classical(3), q)
        assert abs(fit.alpha_a) <= 1e-12 and abs(fit.alpha_d) <= 1e-12
        assert max(fit.residuals) <= 1e-12


def test_half_casimir_constraint():
    half = casimir(2) * 0.5
    z = TensorOperator.zeros(2, 2)
    r = ClassicalRSet(2, lambda q: {"a": half, "b": z, "c": z, "d": half}, lambda q, k: dict.fromkeys("abcd", z))
    fit = constraint_residuals(r, [0.3, 0.1])
    assert fit.alpha_a == pytest.approx(1.0) and fit.alpha_d == pytest.approx(1.0)
    assert fit.residuals == (0.0, 0.0, 0.0)


def test_hyperbolic_b_flip_is_c():
    for q in q_samples(3, 5):
        m = rs_hyperbolic(3).matrices(q)
        assert rel_residual(swap(m["b"]), m["c"]) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_hyperbolic_quartet(n):
    r = rs_hyperbolic(n)
    for q in q_samples(n, 10, seed=n):
        assert max(classical_quartet_residuals(r, q)) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_rational_classical_quartet(seed, n):
    q = sample_lambda(np.random.default_rng(seed), n, 0.0, None, 0.05, 0)
    assert max(classical_quartet_residuals(rs_rational_classical(n), q)) <= 1e-9


def test_casimir_removed_control():
    r = rs_hyperbolic(3, include_casimir=False)
    for q in q_samples(3, 10):
        res = classical_quartet_residuals(r, q)
        assert max(res[1], res[3]) >= 1e-3


def test_zero_set_quartet():
    assert classical_quartet_residuals(zero_set(3), [0.1, 0.4, -0.5]) == (0.0, 0.0, 0.0, 0.0)


def test_pb_form_reported_and_differs():
    q = q_samples(3, 1)[0]
    assert pb_form_iii_residual(rs_hyperbolic(3), q) > 1e-3


def test_cm_r_matrix_residual_is_finite():
    r, res = cm_r_matrix(rs_hyperbolic(2), [0.7, -0.2])
    assert r.legs == 2 and np.isfinite(res)


@pytest.mark.parametrize("make", [rs_hyperbolic, rs_rational_classical])
def test_partials_match_finite_differences(make):
    for n in (2, 3):
        for q in q_samples(n, 5, seed=n):
            assert partials_residual(make(n), q) <= 1e-6


def test_partial_index_range():
    with pytest.raises(IndexError):
        rs_hyperbolic(2).partial([0.5, 0.0], 3)


def test_rational_classical_matches_oracle_derivative():
    # symmetric difference of the entrywise quantum oracle in γ
    h = 1e-6
    for n in (2, 3):
        for lam in q_samples(n, 3, seed=n):
            m = rs_rational_classical(n).matrices(lam)
            for name, ref in (("a", oracles.rs_A), ("b", oracles.rs_B), ("c", oracles.rs_C), ("d", oracles.rs_D)):
                est = (ref(n, h, lam) - ref(n, -h, lam)) / (2 * h)
                assert rel_residual(m[name], TensorOperator(n, 2, est)) < 1e-8, name


def test_rational_classical_has_no_gamma():
    r = rs_rational_classical(2)
    assert not hasattr(r, "gamma")


def test_flipped_b_rebuilds_c():
    r = rs_rational_classical(2, flipped_b_term=(1, 2))
    m = r.matrices([0.4, -0.3])
    assert rel_residual(swap(m["b"]), m["c"]) == 0.0
    assert rel_residual(m["b"], rs_rational_classical(2).matrices([0.4, -0.3])["b"]) > 0.1


# ---- γ → 0

def test_leading_order_identity():
    one = DynamicalOperator(2, 0.3, (1, 2), lambda lam, g: TensorOperator.identity(2, 2))
    assert leading_order(one)([0.1, 0.3]).norm() == 0.0


@pytest.mark.parametrize("n", [2, 3])
def test_leading_order_matches_classical(n):
    s = rs_rational(n, 0.3)
    c = rs_rational_classical(n)
    for lam in q_samples(n, 10, seed=n):
        m = c.matrices(lam)
        for big, small in zip("ABCD", "abcd"):
            assert rel_residual(leading_order(getattr(s, big))(lam), m[small]) <= 1e-6


def test_leading_order_near_pole():
    s = rs_rational(2, 0.3)
    lam = [0.052, 0.0]
    lo = leading_order(s.B)(lam)
    assert rel_residual(lo, rs_rational_classical(2).matrices(lam)["b"]) <= 1e-6


def test_leading_order_nonconvergence():
    x = TensorOperator(2, 1, np.array([[0.0, 1.0], [1.0, 0.0]]))
    one = TensorOperator.identity(2, 1)
    rough = DynamicalOperator(2, 0.3, (1,), lambda lam, g: one + np.sqrt(abs(g)) * x)
    with pytest.raises(ConvergenceError):
        leading_order(rough)([0.0, 0.0])


def test_truncated_set_is_exact_for_A_and_D():
    s = rs_rational(2, 0.1)
    t = truncated_set(rs_rational_classical(2), 0.1)
    lam = [0.7, -0.2]
    assert rel_residual(t.A.local(lam), s.A.local(lam)) < 1e-15
    assert rel_residual(t.D.local(lam), s.D.local(lam)) < 1e-15
    assert rel_residual(t.B.local(lam), s.B.local(lam)) > 1e-3


def test_scaling_slopes_rational():
    fit = scaling_slope(rs_rational_classical(2), [0.7, -0.2])
    assert fit.status[:2] == ["at floor", "at floor"]
    for slope in fit.slopes[2:]:
        assert 2.7 <= slope <= 3.5


def test_scaling_slopes_broken_set():
    fit = scaling_slope(rs_rational_classical(2, flipped_b_term=(1, 2)), [0.7, -0.2])
    assert min(s for s in fit.slopes if s is not None) <= 2.4


def test_scaling_zero_set_at_floor():
    fit = scaling_slope(zero_set(2), [0.72, -0.15])
    assert fit.status == ["at floor"] * 4
    assert all(v == 0.0 for row in fit.residuals for v in row)


def test_scaling_too_few_points():
    with pytest.raises(InsufficientDataError):
        scaling_slope(rs_rational_classical(2), [0.7, -0.2], grid=(1e-1, 3e-2))


def test_scaling_requires_grid_admissibility():
    from dynquad.dynamical import PoleProximityError

    with pytest.raises(PoleProximityError):
        scaling_slope(rs_rational_classical(2), [0.3, 0.0])


def test_grid_sampler():
    from dynquad.classical import DEFAULT_SLOPE_GRID, sample_for_grid
    from dynquad.dynamical import is_admissible

    lam = sample_for_grid(np.random.default_rng(1), 3)
    assert all(is_admissible(lam, g) for g in DEFAULT_SLOPE_GRID)
