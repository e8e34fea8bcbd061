import numpy as np
import pytest

from bmspectra.errors import UnsupportedDim
from bmspectra.measure import cone_measure
from bmspectra.sphere import (
    Field,
    build_grid,
    even_project,
    parity_decompose,
    parity_labels,
    spherical_derivatives,
)


def angle(grid):
    return np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])


def test_circle_grid(circle):
    assert circle.size == 256
    assert np.allclose(circle.weights, 2 * np.pi / 256)
    assert circle.integrate(np.cos(angle(circle)) ** 2) == pytest.approx(np.pi, abs=1e-12)


def test_antipode_involution(circle, sphere20):
    for g in (circle, sphere20):
        a = g.antipode
        assert np.array_equal(a[a], np.arange(g.size))
        assert np.allclose(g.nodes[a], -g.nodes, atol=1e-14)


def test_sphere_quadrature(sphere20, rng):
    g = sphere20
    assert g.weights.sum() == pytest.approx(4 * np.pi, rel=1e-10)
    assert g.integrate(g.nodes[:, 0] ** 2) == pytest.approx(4 * np.pi / 3, abs=1e-8)
    # random polynomial of the exactness degree against a finer grid
    fine = build_grid(3, 40)
    c = rng.standard_normal(4)
    deg = g.exactness_degree

    def poly(y):
        return c[0] * y[:, 0] ** deg + c[1] * y[:, 1] ** (deg - 1) * y[:, 2] + c[2] * y[:, 2] ** 2 + c[3]

    assert g.integrate(poly(g.nodes)) == pytest.approx(fine.integrate(poly(fine.nodes)), abs=1e-10)


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDim):
        build_grid(4, 20)


def test_derivatives_on_circle(circle):
    t = angle(circle)
    d = spherical_derivatives(Field(circle, np.cos(2 * t)))
    assert np.max(np.abs(d.hessian[:, 0, 0] + 4 * np.cos(2 * t))) <= 1e-10
    lin = spherical_derivatives(Field(circle, np.cos(t)))
    assert np.max(np.abs(lin.d2)) <= 1e-10
    const = spherical_derivatives(Field(circle, np.full(circle.size, 3.0)))
    assert np.max(np.abs(const.gradient)) <= 1e-10
    assert np.allclose(const.d2[:, 0, 0], 3.0)


def test_d2_matches_homogeneous_extension():
    g = build_grid(3, 48)
    y = g.nodes
    a = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
    # F(x) = sqrt(x^T a x) is 1-homogeneous; D^2 f is its Hessian on the tangent plane
    f = np.sqrt(np.einsum("ni,ij,nj->n", y, a, y))
    d = spherical_derivatives(Field(g, f))
    ax = y @ a
    H = (a - ax[:, :, None] * ax[:, None, :] / f[:, None, None] ** 2) / f[:, None, None]
    ref = np.einsum("nia,nij,njb->nab", g.frames, H, g.frames)
    assert np.max(np.abs(d.d2 - ref)) <= 1e-8


def test_even_project(circle):
    t = angle(circle)
    f = Field(circle, np.cos(t) + np.cos(2 * t))
    e = even_project(f)
    assert np.allclose(e.values, np.cos(2 * t), atol=1e-14)
    assert np.allclose(even_project(e).values, e.values)


def test_parity_decompose(circle, sphere20, lq3_reg):
    t = angle(circle)
    parts = parity_decompose(Field(circle, np.cos(t) * np.sin(t)))
    norms = [np.max(np.abs(p.values)) for p in parts]
    assert parity_labels(2)[int(np.argmax(norms))] == (1, 1)
    assert sorted(norms)[-2] <= 1e-14

    ones = parity_decompose(Field(circle, np.ones(circle.size)))
    assert np.allclose(ones[0].values, 1) and all(np.allclose(p.values, 0) for p in ones[1:])

    y = sphere20.nodes
    f = Field(sphere20, np.exp(y[:, 0] * y[:, 1] + 0.3 * y[:, 1] * y[:, 2] + y[:, 0] ** 2))
    parts = parity_decompose(f)
    assert np.allclose(sum(p.values for p in parts), f.values)
    for a, p in zip(parity_labels(3), parts):
        if sum(a) % 2:
            assert np.max(np.abs(p.values)) <= 1e-14


def test_parity_components_orthogonal_in_cone_measure(circle, lq3_reg):
    t = angle(circle)
    f = Field(circle, np.exp(np.cos(t) + 0.3 * np.sin(3 * t)))
    w = cone_measure(lq3_reg, circle).weights
    parts = parity_decompose(f)
    for i in range(4):
        for j in range(i + 1, 4):
            assert abs(np.dot(w, parts[i].values * parts[j].values)) <= 1e-10


def test_field_rejects_nonfinite(circle):
    with pytest.raises(ValueError):
        Field(circle, np.full(circle.size, np.nan))
