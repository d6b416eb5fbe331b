import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nhred.geometry import (Chart, ChartPoint, DegenerateInput, Euclidean, FiniteDifference, FrameAt,
                            MismatchedBasePoint, Rotations, SpherePatch, StepTooLarge, annihilator,
                            directional_derivative, exterior_derivative_at, expm_so3, frame_annihilator, hat,
                            intersect, is_antisymmetric, jacobiator_at, lie_bracket_at, logm_so3, null_space, orth,
                            polar, product_chart, rank, subspace_distance, subspace_intersect, vee, wedge)

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
FD4 = FiniteDifference(step=1e-3, order=4)


@given(vec3)
def test_hat_vee_round_trip_and_cross_product(v):
    w = np.array([0.3, -1.1, 0.7])
    assert np.allclose(vee(hat(v)), v)
    assert np.allclose(hat(v) @ w, np.cross(v, w))


@given(arrays(np.float64, 3, elements=st.floats(-1.0, 1.0)))
def test_so3_exp_log_round_trip(v):
    r = expm_so3(v)
    assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(r), 1.0)
    assert np.allclose(logm_so3(r), v, atol=1e-9)


def test_expm_small_angle_series_matches_closed_form():
    v = np.array([3e-7, -2e-7, 1e-7])
    exact = np.eye(3) + hat(v) + 0.5 * hat(v) @ hat(v)
    assert np.allclose(expm_so3(v), exact, atol=1e-18)


def test_polar_projects_onto_rotations():
    r = expm_so3(np.array([0.2, 0.5, -0.3]))
    noisy = r + 1e-6 * np.arange(9).reshape(3, 3)
    q = polar(noisy)
    assert np.allclose(q.T @ q, np.eye(3), atol=1e-14)
    assert np.max(np.abs(q - r)) < 1e-5


@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite))
def test_wedge_is_antisymmetric(a, b):
    w = wedge(a, b)
    assert is_antisymmetric(w)
    assert np.allclose(wedge(b, a), -w)


def test_chart_storage_and_structure():
    chart = product_chart("c", Chart("a", [Rotations("left")]), Chart("b", [Euclidean(2, ["x", "y"])]))
    assert chart.dim == 5 and chart.size == 11
    assert chart.names == ["rot1", "rot2", "rot3", "x", "y"]
    c = chart.structure()
    # left-invariant frame: [E1, E2] = E3
    assert c[2, 0, 1] == 1.0 and c[2, 1, 0] == -1.0
    assert np.all(c[3:] == 0.0)


def test_rotation_chart_log_inverts_displace():
    for side in ("left", "right"):
        chart = Chart("r", [Rotations(side)])
        x = expm_so3(np.array([0.1, 0.2, 0.3])).reshape(9)
        v = np.array([0.05, -0.02, 0.04])
        assert np.allclose(chart.log(x, chart.displace(x, v)), v, atol=1e-12)


def test_sphere_patch_stays_on_sphere_and_signals_boundary():
    s = SpherePatch(2.0)
    x = np.array([0.3, -0.4, -np.sqrt(4 - 0.25)])
    y = s.displace(x, np.array([0.1, 0.2]), 1.0)
    assert np.isclose(np.linalg.norm(y), 2.0) and y[2] < 0
    assert np.all(np.isnan(s.displace(x, np.array([5.0, 0.0]), 1.0)))
    v = s.velocity(x, np.array([1.0, 2.0]))
    assert np.isclose(v @ x, 0.0)


def test_directional_derivative_orders():
    chart = Chart("e", [Euclidean(1)])
    x = np.array([0.4])
    errs = {}
    for order in (2, 4):
        errs[order] = [abs(directional_derivative(lambda y: np.sin(y[0]), chart, x, [1.0],
                                                  FiniteDifference(h, order)) - np.cos(0.4)) for h in (1e-2, 5e-3)]
    assert 3.5 < errs[2][0] / errs[2][1] < 4.5
    assert 14 < errs[4][0] / errs[4][1] < 18


def test_finite_difference_rejects_bad_settings():
    with pytest.raises(ValueError):
        FiniteDifference(step=1e-3, order=3)
    with pytest.raises(ValueError):
        FiniteDifference(step=0.0)


def test_stencil_leaving_region_raises():
    chart = Chart("half", [Euclidean(1)], admissible=lambda x: x[0] > 0)
    with pytest.raises(StepTooLarge):
        directional_derivative(lambda y: y, chart, np.array([1e-7]), [1.0], FiniteDifference(1e-3, 2))


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, 3, elements=finite))
def test_d_squared_vanishes_on_euclidean_space(x):
    chart = Chart("e", [Euclidean(3)])

    def f(y):
        return np.sin(y[0]) * y[1] + y[2] ** 2 * y[0]

    def df(y):
        return exterior_derivative_at(f, chart, y, 0, FD4)

    assert np.max(np.abs(exterior_derivative_at(df, chart, x, 1, FD4))) < 1e-7


def test_exterior_derivative_of_known_forms():
    chart = Chart("e", [Euclidean(3)])
    x = np.array([0.3, -0.7, 1.1])
    e = np.eye(3)
    # d(x dy) = dx∧dy, components dα(E_j, E_k)
    d = exterior_derivative_at(lambda y: np.array([0.0, y[0], 0.0]), chart, x, 1, FD4)
    assert np.allclose(d, wedge(e[0], e[1]), atol=1e-10)
    # d(z dx∧dy) = dz∧dx∧dy: component (0, 1, 2) is 1
    d = exterior_derivative_at(lambda y: y[2] * wedge(e[0], e[1]), chart, x, 2, FD4)
    assert np.isclose(d[0, 1, 2], 1.0) and np.isclose(d[1, 0, 2], -1.0)


def test_maurer_cartan_on_rotations():
    """Left-invariant coframe: dθ¹(E2, E3) = −θ¹([E2, E3]) = −1."""
    chart = Chart("r", [Rotations("left")])
    x = expm_so3(np.array([0.3, -0.2, 0.5])).reshape(9)
    d = exterior_derivative_at(lambda y: np.array([1.0, 0.0, 0.0]), chart, x, 1, FD4)
    assert np.isclose(d[1, 2], -1.0) and np.isclose(d[0, 1], 0.0)


def test_lie_bracket_of_frame_and_coordinate_fields():
    chart = Chart("r", [Rotations("left")])
    x = expm_so3(np.array([0.3, -0.2, 0.5])).reshape(9)
    e = np.eye(3)
    br = lie_bracket_at(lambda y: e[0], lambda y: e[1], chart, x, FD4)
    assert np.allclose(br, e[2], atol=1e-12)
    flat = Chart("e", [Euclidean(2)])
    # [x ∂y, y ∂x] = x ∂x − y ∂y
    br = lie_bracket_at(lambda y: np.array([0.0, y[0]]), lambda y: np.array([y[1], 0.0]), flat,
                        np.array([0.4, -1.2]), FD4)
    assert np.allclose(br, [0.4, 1.2], atol=1e-9)


def test_jacobiator_of_lie_poisson_and_non_poisson_bivectors():
    chart = Chart("e", [Euclidean(3)])
    x = np.array([0.2, -0.5, 0.9])
    lp = lambda y: hat(y).T  # π^{ij} = ε_ijk x_k
    assert abs(jacobiator_at(lp, chart, x, (0, 1, 2), FD4)) < 1e-10

    def bad(y):
        out = wedge(np.eye(3)[0], np.eye(3)[1])
        return out + y[1] * wedge(np.eye(3)[1], np.eye(3)[2])

    assert np.isclose(jacobiator_at(bad, chart, x, (0, 1, 2), FD4), 1.0)


@settings(max_examples=30)
@given(arrays(np.float64, (5, 3), elements=finite), arrays(np.float64, (3, 3), elements=finite))
def test_subspace_distance_is_basis_independent(a, m):
    with np.errstate(all="ignore"):
        assume(rank(a) == 3 and abs(np.linalg.det(m)) > 1e-3 and np.linalg.cond(a) < 1e6)
    assert subspace_distance(a, a @ m) < 1e-8
    assert subspace_distance(a, orth(a)) < 1e-8


def test_subspace_operations():
    e = np.eye(4)
    a = e[:, :2]
    b = e[:, 1:3]
    assert intersect(a, b).shape[1] == 1
    assert subspace_distance(intersect(a, b), e[:, [1]]) < 1e-14
    ann = annihilator(a)
    assert ann.shape == (4, 2) and np.allclose(ann.T @ a, 0)
    assert null_space(np.zeros((0, 3))).shape == (3, 3)
    assert subspace_distance(a, e[:, :3]) == 1.0


def test_frame_wrappers_check_base_points():
    p, q = ChartPoint("c", np.zeros(2)), ChartPoint("c", np.ones(2))
    f = FrameAt(p, np.eye(2)[:, :1])
    g = FrameAt(q, np.eye(2)[:, 1:])
    with pytest.raises(MismatchedBasePoint):
        subspace_intersect(f, g)
    with pytest.raises(DegenerateInput):
        FrameAt(p, np.ones((2, 2)))
    ann = frame_annihilator(f)
    assert ann.variance == "cotangent" and ann.rank == 1
