import numpy as np
import pytest

from harmonic_top import core
from harmonic_top.core import (
    axis,
    flow_L3,
    flow_lz,
    flow_norml,
    grad_H,
    grad_L3,
    grad_lz,
    half_frame_matrices,
    hamiltonian,
    hamiltonian_vector_field,
    integrate,
    l3_integral,
    poisson_bracket_numeric,
    poisson_matrix_spatial,
    rotation,
    symmetry_vector_fields,
)
from harmonic_top.params import DomainError, IntegrationError, ModelParams, PhasePoint

from conftest import FIG, random_state

S2 = 1 / np.sqrt(2)


def Rx(t):
    return np.array([[1, 0, 0], [0, np.cos(t), -np.sin(t)], [0, np.sin(t), np.cos(t)]])


def Rz(t):
    return np.array([[np.cos(t), -np.sin(t), 0], [np.sin(t), np.cos(t), 0], [0, 0, 1]])


def test_half_frame_identity_quaternion():
    xp, xm = half_frame_matrices([1, 0, 0, 0])
    expected = np.array([[0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]])
    assert np.array_equal(xp, expected)
    assert np.array_equal(xm, expected)


def test_half_frame_identities(rng):
    for _ in range(100):
        x = random_state(rng).x
        xp, xm = half_frame_matrices(x)
        assert np.allclose(xp @ xp.T, np.eye(3), atol=1e-14)
        assert np.allclose(xm @ xm.T, np.eye(3), atol=1e-14)
        assert np.allclose(xp.T @ xp @ xm.T, xm.T, atol=1e-14)
        assert np.allclose(xm.T @ xm @ xp.T, xp.T, atol=1e-14)


def test_non_unit_quaternion_rejected():
    with pytest.raises(DomainError):
        half_frame_matrices([1.0, 0.1, 0, 0])
    with pytest.raises(DomainError):
        PhasePoint([2, 0, 0, 0], [0, 0, 0])


def test_rotation_examples(rng):
    assert np.allclose(rotation([1, 0, 0, 0]), np.eye(3))
    th = 0.83
    # with R = x+ x-^t this quaternion turns by -theta about e_x
    assert np.allclose(rotation([np.cos(th / 2), np.sin(th / 2), 0, 0]), Rx(-th), atol=1e-15)
    for _ in range(100):
        x = random_state(rng).x
        R = rotation(x)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-13)
        assert abs(np.linalg.det(R) - 1) < 1e-13
        assert np.allclose(rotation(-x), R, atol=1e-15)


def test_axis_examples(rng):
    assert np.allclose(axis([1, 0, 0, 0]), [0, 0, 1])
    assert np.allclose(axis([S2, S2, 0, 0]), [0, 1, 0], atol=1e-15)
    for _ in range(100):
        x = random_state(rng).x
        assert np.allclose(axis(x), rotation(x) @ [0, 0, 1], atol=1e-14)
        assert abs(np.linalg.norm(axis(x)) - 1) < 1e-14


def test_hamiltonian_examples():
    p = FIG["a"]
    assert hamiltonian(PhasePoint([1, 0, 0, 0], [0, 0, 0]), p) == pytest.approx(1.4, abs=1e-15)
    assert hamiltonian(PhasePoint([1, 0, 0, 0], [0, 0, 2]), p) == pytest.approx(3.4, abs=1e-15)
    assert hamiltonian(PhasePoint([0, 1, 0, 0], [0, 0, 0]), p) == pytest.approx(-0.6, abs=1e-15)


def test_l3_examples(rng):
    assert l3_integral(PhasePoint([1, 0, 0, 0], [0, 0, 1])) == 1.0
    assert l3_integral(PhasePoint([S2, S2, 0, 0], [0, 1, 0])) == pytest.approx(1.0, abs=1e-15)
    for _ in range(100):
        s = random_state(rng)
        assert l3_integral(s) == pytest.approx(s.l @ axis(s.x), abs=1e-14)


def test_poisson_matrix(rng):
    for _ in range(20):
        s = random_state(rng)
        B = poisson_matrix_spatial(s)
        assert np.max(np.abs(B + B.T)) < 1e-15
        assert np.max(np.abs(B @ np.concatenate([2 * s.x, np.zeros(3)]))) < 1e-15
    s = PhasePoint([1, 0, 0, 0], [0, 0, 1])
    xp, _ = half_frame_matrices(s.x)
    assert np.array_equal(poisson_matrix_spatial(s)[:4, 4:], 0.5 * xp.T)


def test_coordinate_bracket_is_matrix_entry():
    s = PhasePoint([1, 0, 0, 0], [0, 0, 1])
    f = lambda p: p.x[0]
    g = lambda p: p.l[0]
    assert poisson_bracket_numeric(f, g, s) == pytest.approx(poisson_matrix_spatial(s)[0, 4], abs=1e-9)


def test_jacobi_identity(rng):
    # structure functions are affine in (x, l), so the Jacobi sum can be
    # built from finite differences of B itself
    s = random_state(rng)
    v0 = s.as_vector()
    h = 1e-6
    dB = np.empty((7, 7, 7))
    for k in range(7):
        e = np.zeros(7)
        e[k] = h
        dB[k] = (poisson_matrix_spatial(PhasePoint.from_vector(v0 + e, check=False))
                 - poisson_matrix_spatial(PhasePoint.from_vector(v0 - e, check=False))) / (2 * h)
    B = poisson_matrix_spatial(s)
    J = (np.einsum("il,ljk->ijk", B, dB) + np.einsum("jl,lki->ijk", B, dB)
         + np.einsum("kl,lij->ijk", B, dB))
    assert np.max(np.abs(J)) < 1e-6


def test_analytic_gradients_match_finite_differences(rng):
    p = ModelParams(1.3, 0.4, 0.7, -0.9)
    for _ in range(20):
        s = random_state(rng)
        assert np.allclose(grad_H(s, p), core._fd_gradient(lambda q: hamiltonian(q, p), s), atol=1e-7)
        assert np.allclose(grad_L3(s), core._fd_gradient(l3_integral, s), atol=1e-7)
        assert np.allclose(grad_lz(s), core._fd_gradient(core.lz_integral, s), atol=1e-7)


def test_vector_field_decomposition(rng):
    p = ModelParams(1.2, 0.5, 1.0, 0.4)
    for _ in range(20):
        s = random_state(rng)
        XL3, _, Xl2 = symmetry_vector_fields(s)
        xp, _ = half_frame_matrices(s.x)
        J = core.axis_jacobian(s.x)
        gradV = p.dV(axis(s.x)[2]) * J[2]
        expect = Xl2 / (2 * p.I1) + p.delta * l3_integral(s) / p.I1 * XL3
        expect[4:] -= 0.5 * xp @ gradV
        assert np.allclose(hamiltonian_vector_field(s, p), expect, atol=1e-13)


def test_vector_field_against_fd_gradient(rng):
    p = FIG["b"]
    for _ in range(100):
        s = random_state(rng)
        g = core._fd_gradient(lambda q: hamiltonian(q, p), s)
        assert np.allclose(hamiltonian_vector_field(s, p), poisson_matrix_spatial(s) @ g, atol=1e-6)


def test_vector_field_equilibria():
    p = FIG["b"]
    az = -p.c1 / (2 * p.c2)
    th = np.arccos(az)
    s = PhasePoint([np.cos(th / 2), np.sin(th / 2), 0, 0], [0, 0, 0])
    assert abs(axis(s.x)[2] - az) < 1e-15
    assert np.max(np.abs(hamiltonian_vector_field(s, p))) < 1e-15
    up = PhasePoint([1, 0, 0, 0], [0, 0, 2.0])
    assert np.max(np.abs(hamiltonian_vector_field(up, FIG["a"])[4:])) < 1e-15


def test_symmetry_fields_are_hamiltonian(rng):
    for _ in range(20):
        s = random_state(rng)
        B = poisson_matrix_spatial(s)
        XL3, Xlz, Xl2 = symmetry_vector_fields(s)
        assert np.allclose(XL3, B @ grad_L3(s), atol=1e-15)
        assert np.allclose(Xlz, B @ grad_lz(s), atol=1e-15)
        assert np.allclose(Xl2, B @ np.concatenate([np.zeros(4), 2 * s.l]), atol=1e-15)


def test_sleeping_fields_parallel():
    XL3, Xlz, _ = symmetry_vector_fields(PhasePoint([1, 0, 0, 0], [0, 0, 1]))
    assert np.linalg.matrix_rank(np.column_stack([XL3, Xlz]), tol=1e-12) == 1


def test_generic_field_rank(rng):
    s = random_state(rng)
    XL3, Xlz, _ = symmetry_vector_fields(s)
    M = np.column_stack([hamiltonian_vector_field(s, FIG["a"]), XL3, Xlz])
    sv = np.linalg.svd(M, compute_uv=False)
    assert sv[2] / sv[0] > 1e-3


def test_norml_field_chain_rule():
    s = PhasePoint([1, 0, 0, 0], [0, 0, 2.0])
    _, _, Xl2 = symmetry_vector_fields(s)
    h = 1e-6
    num = (flow_norml(s, h).as_vector() - flow_norml(s, -h).as_vector()) / (2 * h)
    # d|l| = d(l^2) / (2 |l|)
    assert np.allclose(Xl2, 2 * np.linalg.norm(s.l) * num, atol=1e-9)


@pytest.mark.parametrize("flow", [flow_L3, flow_lz])
def test_flow_periods(flow, rng):
    for _ in range(20):
        s = random_state(rng)
        f4 = flow(s, 4 * np.pi)
        f2 = flow(s, 2 * np.pi)
        assert np.allclose(f4.x, s.x, atol=1e-12) and np.allclose(f4.l, s.l, atol=1e-12)
        assert np.allclose(f2.x, -s.x, atol=1e-12) and np.allclose(f2.l, s.l, atol=1e-12)


def test_flows_match_vector_fields(rng):
    s = random_state(rng)
    XL3, Xlz, Xl2 = symmetry_vector_fields(s)
    h = 1e-6
    for flow, X in ((flow_L3, XL3), (flow_lz, Xlz), (flow_norml, Xl2 / (2 * np.linalg.norm(s.l)))):
        num = (flow(s, h).as_vector() - flow(s, -h).as_vector()) / (2 * h)
        assert np.allclose(num, X, atol=1e-9)


def test_flows_preserve_integrals(rng):
    p = ModelParams(1.1, 0.3, 1.0, -0.7)
    for _ in range(20):
        s = random_state(rng)
        for flow in (flow_L3, flow_lz):
            t = flow(s, rng.uniform(-7, 7))
            assert abs(np.linalg.norm(t.x) - 1) < 1e-14
            assert hamiltonian(t, p) == pytest.approx(hamiltonian(s, p), abs=1e-13)
            assert t.l[2] == pytest.approx(s.l[2], abs=1e-13)
            assert l3_integral(t) == pytest.approx(l3_integral(s), abs=1e-13)


def test_flow_norml_is_rodrigues_rotation():
    s = PhasePoint([1, 0, 0, 0], [0, 0, 1])
    for alpha in (0.3, 1.7, -2.5):
        assert np.allclose(rotation(flow_norml(s, alpha).x), Rz(alpha), atol=1e-15)
    s = PhasePoint([1, 0, 0, 0], [0, 0, 0])
    with pytest.raises(DomainError):
        flow_norml(s, 1.0)


def test_integrate_sleeping_equilibrium():
    p = FIG["a"]
    s = PhasePoint([1, 0, 0, 0], [0, 0, 3.0])
    # the sleeping top still rotates along the symmetry flow; with projection
    # onto |x| = 1 the integrals stay constant to rounding
    tr = integrate(s, p, 20.0, 1e-12, project=True)
    d = tr.drift
    assert max(d["H"], d["lz"], d["L3"], d["xnorm"]) < 1e-12
    for y in tr.y:
        q = PhasePoint.from_vector(y, check=False)
        assert np.allclose(axis(q.x), [0, 0, 1], atol=1e-12)
        assert np.allclose(q.l, s.l, atol=1e-12)
    d = integrate(s, p, 20.0, 1e-13).drift
    assert max(d["H"], d["lz"], d["L3"], d["xnorm"]) < 1e-11


def test_integrate_generic_conservation(rng):
    p = ModelParams(1.0, 0.3, 1.0, 0.4)
    s = random_state(rng)
    tr = integrate(s, p, 100.0, 1e-10)
    d = tr.drift
    assert d["H"] < 1e-7 and d["lz"] < 1e-7 and d["L3"] < 1e-7 and d["xnorm"] < 1e-8


def test_integrate_projection_keeps_unit_norm(rng):
    s = random_state(rng)
    tr = integrate(s, FIG["a"], 10.0, 1e-8, project=True)
    assert tr.drift["xnorm"] < 1e-12


def test_integrate_negative_time_reverses(rng):
    s = random_state(rng)
    fw = integrate(s, FIG["a"], 3.0, 1e-12, n_samples=2)
    back = integrate(PhasePoint.from_vector(fw.y[-1], check=False), FIG["a"], -3.0, 1e-12, n_samples=2)
    assert np.allclose(back.y[-1], s.as_vector(), atol=1e-9)


def test_integrate_failure_carries_partial():
    s = PhasePoint([1, 0, 0, 0], [0.3, 0.1, 1.0])
    p = ModelParams(1.0, 0.0, 1.0, 0.4)
    with pytest.raises(IntegrationError) as exc:
        # absurd tolerance forces step-size underflow
        integrate(s, p, 10.0, 1e-300)
    assert exc.value.partial is not None
    with pytest.raises(DomainError):
        integrate(s, p, 1.0, 0.0)
