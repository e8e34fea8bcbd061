import math

import numpy as np
import pytest

from bmspectra.body import BodySpec, make_body
from bmspectra.criteria import (
    p_from_Calpha,
    p_from_Cnu,
    p_from_ratio,
    params_from_p,
    pinch_alphabeta,
    pinch_lambda,
    pinch_threshold,
    product_constant,
    qij_report,
    richardson,
    sample_orthant_points,
    transfer_backward,
    transfer_forward,
)
from bmspectra.errors import AxisProximity, DomainError, NonpositiveDenominator, OutOfBracket


def test_transfer_examples():
    assert transfer_forward(3, 2, 0.5) == pytest.approx(1 / 6, abs=1e-15)
    assert p_from_Calpha(3, 2, 0.5) == pytest.approx(-3, abs=1e-12)
    alpha, beta, c_nu = params_from_p(4, -4)
    assert (alpha, beta, c_nu) == (2, 2, 0.125)
    assert p_from_Cnu(4, c_nu) == pytest.approx(-4)


def test_transfer_errors():
    with pytest.raises(OutOfBracket):
        transfer_forward(3, 2, 1.5)
    with pytest.raises(NonpositiveDenominator):
        transfer_forward(1, 3, 1.0)
    with pytest.raises(DomainError):
        params_from_p(3, 0.5)
    with pytest.raises(DomainError):
        transfer_backward(3, 0.5, 0.2)


def test_transfer_endpoints(rng):
    for _ in range(20):
        n, alpha = int(rng.integers(2, 9)), rng.uniform(1.1, 6)
        lo = 1 - 1 / alpha
        assert transfer_forward(n, alpha, lo) == pytest.approx(lo / n, abs=1e-12)
        assert abs(transfer_backward(n, alpha, transfer_forward(n, alpha, lo)) - lo) <= 1e-14
        assert p_from_Calpha(n, alpha, 1.0) == pytest.approx(1, abs=1e-12)
        assert p_from_Calpha(n, alpha, lo) == pytest.approx(-n / (alpha - 1), abs=1e-12)


def test_product_constant():
    assert product_constant(3, 1) == pytest.approx(2 / 3)
    assert product_constant(1.5, 2) == 0.5
    assert product_constant(3, 2) == pytest.approx(2 / 3)


def test_pinch_threshold():
    for n in (2, 3, 5):
        assert abs(p_from_ratio(n, pinch_threshold(n))) <= 1e-12


def test_pinch_ball(ball2, circle):
    a, b, p = pinch_alphabeta(ball2, circle)
    assert a == pytest.approx(1) and b == pytest.approx(1)
    assert p == pytest.approx(-2, abs=1e-14)
    lam, p = pinch_lambda(ball2, circle)
    assert abs(p) <= 1e-14


def test_qij_lq_value():
    for q in (1.5, 2.0, 3.0):
        body = make_body(BodySpec.lq(q, 3))
        rep = qij_report(body, sample_orthant_points(3, 100, seed=2))
        assert rep.max_disagreement <= 1e-7
        assert np.max(np.abs(rep.offdiagonal() - (1 - q))) <= 1e-6


def test_qij_ellipsoid_and_flags():
    body = make_body(BodySpec.ellipsoid([2.0, 1.0, 0.5]))
    rep = qij_report(body, sample_orthant_points(3, 100, seed=5))
    assert rep.max_disagreement <= 1e-7
    assert rep.theorem_applicable
    rep2 = qij_report(make_body(BodySpec.ellipsoid([2.0, 1.0])), sample_orthant_points(2, 20))
    assert not rep2.theorem_applicable and rep2.notes


def test_qij_lq4_condition_holds():
    rep = qij_report(make_body(BodySpec.lq(4, 3)), sample_orthant_points(3, 50, seed=1))
    assert rep.condition_holds


def test_axis_proximity():
    with pytest.raises(AxisProximity):
        qij_report(make_body(BodySpec.ball(3)), [[1.0, 1e-5, 1.0]])


def test_richardson():
    steps = np.array([0.1, 0.05])
    vals = 2 + 3 * steps**2
    assert richardson(vals, steps, order=2) == pytest.approx(2, abs=1e-12)
    assert math.isfinite(richardson([1.0, 1.5], [1, 0.5]))
