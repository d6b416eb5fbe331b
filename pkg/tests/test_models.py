import numpy as np
import pytest

from nhred import MODEL_NAMES, get_model, reference_eval
from nhred.geometry import cross, pushforward_matrix
from nhred.models import (PRESET_MARGIN, InvalidParameter, UnknownExpression, UnknownModel, default_parameters)


def test_registry_and_caching():
    assert MODEL_NAMES == ("nonholonomic-particle", "chaplygin-ball", "ball-on-surface", "bmf-sphere")
    assert get_model("chaplygin-ball") is get_model("chaplygin-ball", {})
    assert get_model("chaplygin-ball", {"mass": 2.0}).params["mass"] == 2.0
    with pytest.raises(UnknownModel):
        get_model("no-such-model")
    with pytest.raises(UnknownModel):
        default_parameters("no-such-model")


@pytest.mark.parametrize("name,overrides,needle", [
    ("chaplygin-ball", {"mass": -1.0}, "mass"),
    ("chaplygin-ball", {"bogus": 1.0}, "bogus"),
    ("chaplygin-ball", {"inertia": [1.0, 2.0]}, "inertia"),
    ("ball-on-surface", {"kappa0": 5.0}, "1/radius"),
    ("bmf-sphere", {"k": 1.0}, "k"),
])
def test_invalid_parameters_name_the_constraint(name, overrides, needle):
    with pytest.raises(InvalidParameter, match=needle):
        get_model(name, overrides)


def test_unknown_reference_expression():
    with pytest.raises(UnknownExpression):
        reference_eval(get_model("nonholonomic-particle"), "chap.pi1", None)


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_constraints_annihilate_d_frame(name):
    m = get_model(name)
    system = m.system
    rng = np.random.default_rng(1)
    for _ in range(3):
        q = m.sample_q(rng)
        b = system.basis(q)
        rows = np.atleast_2d(system.spec.constraints(q))
        assert np.max(np.abs(rows @ b.frame[:, b.D])) < 1e-12
        assert rows.shape[0] == b.counts[2]


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_presets_are_admissible_with_margin(name):
    m = get_model(name)
    dyn, system = m.dynamics, m.system
    for label, state in m.presets.items():
        assert dyn.admissible(state), label
        x = dyn.to_manifold(state)
        assert np.allclose(dyn.to_manifold(dyn.from_manifold(x)), x, atol=1e-12)
    x = dyn.to_manifold(m.presets["default"])
    _, p = system.split(x)
    h = system.counts[0]
    # nonzero momenta in every block of the default preset
    assert np.max(np.abs(p[:h])) > PRESET_MARGIN and np.max(np.abs(p[h:])) > PRESET_MARGIN


def test_chaplygin_constraint_rows():
    m = get_model("chaplygin-ball")
    r = m.params["radius"]
    q = m.sample_q(np.random.default_rng(2))
    g = q[:9].reshape(3, 3)
    alpha, beta = g[0], g[1]
    expected = np.array([np.concatenate([-r * beta, [1.0, 0.0]]), np.concatenate([r * alpha, [0.0, 1.0]])])
    assert np.allclose(m.system.spec.constraints(q), expected)


def test_bmf_constraint_rows():
    """ε^i = dr_i − (1 − k)<gᵀe_i, λ × gᵀr> in the left frame and the (r1, r2) patch."""
    m = get_model("bmf-sphere")
    k = m.params["k"]
    q = m.sample_q(np.random.default_rng(3))
    g, r = q[:9].reshape(3, 3), q[9:12]
    rows = m.system.spec.constraints(q)
    lam, v2 = np.array([0.3, -0.2, 0.5]), np.array([0.1, 0.4])
    for i in range(2):
        expected = v2[i] - (1 - k) * (g.T @ np.eye(3)[i]) @ cross(lam, g.T @ r)
        assert np.isclose(rows[i] @ np.concatenate([lam, v2]), expected)


def test_surface_momentum_coefficients_match_closed_forms():
    """R21 = −κ₀τ / (R(1 + κ₀²τ)), R12 = −κ₀³RIτ / ((I + mR²)(1 + κ₀²τ)) for the quadratic profile."""
    for overrides in ({}, {"radius": 0.2, "kappa0": 0.2}):
        m = get_model("ball-on-surface", overrides)
        k0, rad, inert, mass = (m.params[k] for k in ("kappa0", "radius", "inertia", "mass"))
        for tau in (0.05, 0.3, 1.0, 3.0, 9.0):
            r12, r21 = reference_eval(m, "surface.R", tau)
            den = 1 + k0 * k0 * tau
            assert np.isclose(r21, -k0 * tau / (rad * den), rtol=1e-7)
            assert np.isclose(r12, -k0**3 * rad * inert * tau / ((inert + mass * rad * rad) * den), rtol=1e-7)


def test_bmf_reduced_field_matches_generic_field():
    m = get_model("bmf-sphere")
    system, qd = m.system, m.quotient
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = m.sample_point(rng)
        z = qd.quotient_projection(x)
        pushed = pushforward_matrix(qd.quotient_projection, system.mchart, x, [system.x_nh(x)], system.fd)[:, 0]
        assert np.max(np.abs(pushed - reference_eval(m, "bmf.rhs", z))) <= 1e-7


def test_bmf_first_integral_and_energy_references():
    m = get_model("bmf-sphere")
    system, qd = m.system, m.quotient
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = m.sample_point(rng)
        q, p = system.split(x)
        z = qd.quotient_projection(x)
        f = (np.asarray(m.dmomenta.generators(q)).T @ system.covector(x)).item()
        assert np.isclose(f, reference_eval(m, "bmf.F", z), rtol=1e-10, atol=1e-12)
        nz = qd.base_projection(q)
        assert np.isclose(system.energy(x), reference_eval(m, "bmf.hamiltonian", np.concatenate([nz, p])),
                          rtol=1e-10)


def test_particle_reference_structures():
    m = get_model("nonholonomic-particle")
    pi_c = reference_eval(m, "particle.pi_c", None)
    assert np.array_equal(pi_c, [[0.0, 1.0], [-1.0, 0.0]])
    assert m.k == 1 and m.system.counts == (1, 1, 1)
