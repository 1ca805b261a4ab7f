import numpy as np
import pytest

from harmonic_top.bifurcation import h_thetatheta_sheet, sheet_phase_point
from harmonic_top.core import hamiltonian, l3_integral, rotation
from harmonic_top.euler import (
    EulerPoint,
    euler_rotation,
    euler_to_quaternion,
    from_phase_point,
    h_theta,
    h_thetatheta,
    hamiltonian_euler,
    quaternion_to_euler,
    sheet_euler_point,
    t_round,
    to_phase_point,
)
from harmonic_top.params import ChartSingularityError, ModelParams

from conftest import FIG


def test_quaternion_examples():
    assert np.allclose(euler_to_quaternion(0, 0, 0), [1, 0, 0, 0])
    # vector part carries the opposite sign to the Hamilton convention
    c = np.cos(np.pi / 4)
    assert np.allclose(euler_to_quaternion(0, np.pi / 2, 0), [c, -c, 0, 0])


def test_rotation_round_trip(rng):
    for _ in range(100):
        phi, psi = rng.uniform(-np.pi, np.pi, 2)
        th = rng.uniform(0.05, np.pi - 0.05)
        x = euler_to_quaternion(phi, th, psi)
        assert abs(np.linalg.norm(x) - 1) < 1e-15
        assert np.allclose(rotation(x), euler_rotation(phi, th, psi), atol=1e-13)
        back = quaternion_to_euler(x)
        assert np.allclose(euler_rotation(*back), euler_rotation(phi, th, psi), atol=1e-13)
        assert back[1] == pytest.approx(th, abs=1e-12)


def test_hamiltonian_examples():
    p = FIG["a"]
    assert hamiltonian_euler(EulerPoint(0, np.pi / 2, 0), p) == pytest.approx(0, abs=1e-15)
    assert hamiltonian_euler(EulerPoint(0, np.pi / 2, 0, 1, 0, 1), p) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ChartSingularityError):
        hamiltonian_euler(EulerPoint(0, 0.0, 0, 1, 0, 1), p)
    with pytest.raises(ChartSingularityError):
        h_theta(EulerPoint(0, np.pi, 0), p)


def test_cross_chart_hamiltonian(rng):
    p = ModelParams(1.3, 0.4, 0.7, -0.9)
    for _ in range(100):
        e = EulerPoint(rng.uniform(-3, 3), rng.uniform(0.1, 3.0), rng.uniform(-3, 3), *rng.normal(size=3))
        s = to_phase_point(e)
        assert hamiltonian(s, p) == pytest.approx(hamiltonian_euler(e, p), abs=1e-10)
        assert s.l[2] == pytest.approx(e.p_phi, abs=1e-12)
        assert l3_integral(s) == pytest.approx(e.p_psi, abs=1e-12)
        f = from_phase_point(s)
        assert np.allclose([f.p_phi, f.p_theta, f.p_psi], [e.p_phi, e.p_theta, e.p_psi], atol=1e-11)


def test_t_round_is_half_l_squared(rng):
    for _ in range(20):
        e = EulerPoint(rng.uniform(-3, 3), rng.uniform(0.2, 2.9), rng.uniform(-3, 3), *rng.normal(size=3))
        assert t_round(e) == pytest.approx(0.5 * to_phase_point(e).l @ to_phase_point(e).l, rel=1e-12)


def test_derivatives_match_finite_differences(rng):
    p = ModelParams(1.3, 0.4, 0.7, -0.9)
    h = 1e-5
    for _ in range(50):
        e = EulerPoint(rng.uniform(-3, 3), rng.uniform(0.4, 2.7), rng.uniform(-3, 3), *rng.normal(size=3))

        def H(t):
            return hamiltonian_euler(EulerPoint(e.phi, t, e.psi, e.p_phi, e.p_theta, e.p_psi), p)

        d1 = (H(e.theta + h) - H(e.theta - h)) / (2 * h)
        d2 = (H(e.theta + h) - 2 * H(e.theta) + H(e.theta - h)) / h ** 2
        assert h_theta(e, p) == pytest.approx(d1, abs=1e-7 * max(1, abs(d1)))
        # second difference at step 1e-5 carries roughly eps/h^2 ~ 1e-6 rounding
        assert h_thetatheta(e, p) == pytest.approx(d2, abs=1e-5 * max(1, abs(d2)))
        # a larger step with Richardson removes both errors
        h2 = 1e-3
        d2r = (-H(e.theta + 2 * h2) + 16 * H(e.theta + h2) - 30 * H(e.theta) + 16 * H(e.theta - h2)
               - H(e.theta - 2 * h2)) / (12 * h2 ** 2)
        assert h_thetatheta(e, p) == pytest.approx(d2r, abs=1e-7 * max(1, abs(d2r)))


def test_symmetric_case_h_theta_zero():
    p = ModelParams(1.0, 0.0, 0.0, 0.7)
    assert h_theta(EulerPoint(0.3, np.pi / 2, -0.2), p) == pytest.approx(0, abs=1e-15)


def test_sheet_h_theta_zero_and_closed_form(fig):
    for p in list(fig.values()) + [ModelParams(1.7, 0.3, -0.6, 1.1)]:
        for beta in np.linspace(-3, 3, 12):
            for az in np.linspace(-0.95, 0.95, 11):
                e = sheet_euler_point(beta, az, p)
                assert abs(h_theta(e, p)) < 1e-10
                assert h_thetatheta(e, p) == pytest.approx(h_thetatheta_sheet(p, beta, az), abs=1e-10 * max(1, abs(beta) ** 2 + 1 / beta ** 2))


def test_sheet_gauge():
    p = FIG["a"]
    e = sheet_euler_point(1.3, 0.25, p)
    assert e.p_theta == 0
    s = sheet_phase_point(p, 1.3, 0.25)
    assert np.allclose(rotation(s.x)[:, 2], [np.sqrt(1 - 0.25 ** 2), 0, 0.25], atol=1e-15)
