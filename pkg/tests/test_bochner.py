import pytest

from bmspectra.body import BodySpec, make_body
from bmspectra.bochner import bochner_residual
from bmspectra.errors import DomainError, SupportLeakage
from bmspectra.euclidean import power_potential
from bmspectra.functions import TestFunction
from bmspectra.sphere import Field


def test_euclidean_gaussian_1d():
    u = TestFunction.parse("x**3 - x", 1)
    assert bochner_residual("euclidean", power_potential(2, 1), u) <= 1e-8


def test_euclidean_ellipse():
    from bmspectra.body import HomogeneousPotential

    pot = HomogeneousPotential(make_body(BodySpec.ellipsoid([2.0, 1.0])), 2.0)
    u = TestFunction.parse("x1**2*x2 + x2**4", 2)
    assert bochner_residual("euclidean", pot, u) <= 1e-8


def test_hessian_dual_quartic():
    u = TestFunction.parse("x**2*exp(-x**2)", 1)
    assert bochner_residual("hessian_dual", power_potential(4, 1), u) <= 1e-6


def test_centroaffine_ball(ball2, circle):
    tf = TestFunction.parse("x1**2 - x2**2 + x1*x2", 2)
    u = Field(circle, tf.value(circle.nodes))
    assert bochner_residual("sphere_centroaffine", ball2, u, circle) <= 1e-8


def test_leakage_and_bad_kind(ball2):
    with pytest.raises(SupportLeakage):
        bochner_residual("euclidean", power_potential(2, 1), TestFunction.parse("exp(x**2)", 1))
    with pytest.raises(DomainError):
        bochner_residual("nope", power_potential(2, 1), TestFunction.parse("x", 1))
    with pytest.raises(DomainError):
        bochner_residual("sphere_centroaffine", ball2, None)
