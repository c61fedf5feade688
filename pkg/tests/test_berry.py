import math

import numpy as np
import pytest

from mablab import (
    GaugeSpec,
    ModelParams,
    OrthogonalStatesError,
    PhaseUndefinedError,
    PlanarPath,
    SingularityError,
    adiabatic_eigensystem,
    averaged_closed_form,
    bo_state,
    detect_phase_jumps,
    holonomy_line_integral,
    load_path_csv,
    mab_phase_factor,
    noncyclic_berry_phase,
    pancharatnam_phase,
)
from conftest import circle_path, phase_gap


def random_gauge(rng, max_harmonics=8):
    n = int(rng.integers(1, max_harmonics + 1))
    return GaugeSpec(
        a0=float(rng.uniform(-2.0, 2.0)),
        linear=float(rng.uniform(-2.0, 2.0)),
        cos_coeffs=tuple(rng.uniform(-2.0, 2.0, size=n)),
        sin_coeffs=tuple(rng.uniform(-2.0, 2.0, size=n)),
    )


class TestGaugeSpec:
    def test_presets(self):
        assert GaugeSpec.zero().alpha(1.7) == 0.0
        g = GaugeSpec.single_valued(0.5)
        assert g.alpha(2.0) == pytest.approx(1.0)
        assert g.alpha_prime(0.3) == pytest.approx(0.5)

    def test_derivative_consistency(self, rng):
        g = random_gauge(rng)
        h = 1e-6
        for th in rng.uniform(-5.0, 5.0, size=5):
            fd = (g.alpha(th + h) - g.alpha(th - h)) / (2.0 * h)
            assert g.alpha_prime(th) == pytest.approx(fd, abs=1e-6)

    def test_harmonic_cap(self):
        with pytest.raises(ValueError):
            GaugeSpec(cos_coeffs=(0.1,) * 65)


class TestBoState:
    def test_reference_components(self):
        inv = 1.0 / math.sqrt(2.0)
        np.testing.assert_allclose(bo_state(0.0, 0.5), [inv, inv], atol=1e-15)
        np.testing.assert_allclose(
            bo_state(np.pi, 0.5), [-1j * inv, 1j * inv], atol=1e-15
        )

    def test_normalized_for_random_inputs(self, rng):
        for _ in range(20):
            xi = float(rng.choice([0.5, -1.0, 1.5]))
            th = float(rng.uniform(-8.0, 8.0))
            v = bo_state(th, xi, random_gauge(rng))
            assert abs(np.linalg.norm(v) - 1.0) < 1e-12

    def test_branch_relation_to_eigensystem(self):
        # bo_state is the upper eigenbranch; state_minus differs by the
        # sign of the second component
        p = ModelParams(1.0, 0.5)
        for th in (0.0, 0.9, -2.2):
            es = adiabatic_eigensystem(p, 1.0, th)
            assert abs(np.vdot(bo_state(th, p.xi), es.state_plus)) == pytest.approx(
                1.0, abs=1e-12
            )
            assert abs(np.vdot(bo_state(th, p.xi), es.state_minus)) < 1e-12


class TestPancharatnam:
    def test_identical_states(self):
        a = bo_state(0.3, 0.5)
        assert pancharatnam_phase(a, a) == 0.0

    def test_pure_phase(self, rng):
        a = bo_state(1.0, -1.0)
        for beta in rng.uniform(-3.0, 3.0, size=5):
            got = pancharatnam_phase(a, np.exp(1j * beta) * a)
            assert phase_gap(got, beta) < 1e-12

    def test_orthogonal_states_error(self):
        a = np.array([1.0, 0.0], dtype=complex)
        b = np.array([0.0, 1.0], dtype=complex)
        with pytest.raises(OrthogonalStatesError):
            pancharatnam_phase(a, b)


class TestNoncyclicBerryPhase:
    def test_zero_before_first_jump(self):
        res = noncyclic_berry_phase(0.5, 0.0, np.pi / 2.0)
        assert res.gamma_g == pytest.approx(0.0, abs=1e-12)
        assert res.jumps == []

    def test_pi_after_first_jump(self):
        # sign of cos as the oracle: cos(3 pi / 4) < 0
        res = noncyclic_berry_phase(0.5, 0.0, 1.5 * np.pi)
        assert phase_gap(res.gamma_g, np.pi) < 1e-12
        np.testing.assert_allclose(res.jumps, [np.pi], atol=1e-12)

    def test_quadratic_case(self):
        res = noncyclic_berry_phase(-1.0, 0.0, np.pi / 4.0)
        assert res.gamma_g == pytest.approx(0.0, abs=1e-12)
        assert res.overlap_modulus == pytest.approx(0.7071067811865476, abs=1e-12)

    def test_overlap_modulus_closed_form(self, rng):
        for _ in range(20):
            xi = float(rng.choice([0.5, -1.0]))
            th0 = float(rng.uniform(-3.0, 3.0))
            dth = float(rng.uniform(-6.0, 6.0))
            try:
                res = noncyclic_berry_phase(xi, th0, th0 + dth)
            except PhaseUndefinedError:
                continue
            assert res.overlap_modulus == pytest.approx(
                abs(math.cos(xi * dth)), abs=1e-12
            )

    def test_gauge_invariance(self, rng):
        # the gated property: random smooth gauges leave gamma_g unchanged
        jumps_all = lambda xi: detect_phase_jumps(xi, 0.0, (-8.0, 8.0))
        for _ in range(20):
            gauge = random_gauge(rng)
            for xi in (0.5, -1.0):
                while True:
                    dth = float(rng.uniform(-2.0 * np.pi, 2.0 * np.pi))
                    if min(abs(dth - j) for j in jumps_all(xi)) >= 0.1:
                        break
                res = noncyclic_berry_phase(xi, 0.0, dth, gauge=gauge, grid_n=10_000)
                target = 0.0 if math.cos(xi * dth) > 0 else np.pi
                assert phase_gap(res.gamma_g, target) < 1e-6

    def test_terms_gauge_dependent_but_sum_invariant(self):
        # with a linear gauge both pieces shift by -+ c * dtheta and cancel
        xi, dth, c = 0.5, 2.0, 1.3
        plain = noncyclic_berry_phase(xi, 0.0, dth)
        gauged = noncyclic_berry_phase(xi, 0.0, dth, gauge=GaugeSpec(linear=c))
        assert phase_gap(gauged.pancharatnam_term, plain.pancharatnam_term) > 0.1
        assert abs(gauged.connection_term - plain.connection_term) > 0.1
        assert phase_gap(gauged.pancharatnam_term, plain.pancharatnam_term + c * dth) < 1e-8
        assert gauged.connection_term == pytest.approx(
            plain.connection_term - c * dth, abs=1e-8
        )
        assert phase_gap(gauged.gamma_g, plain.gamma_g) < 1e-8

    def test_jump_point_is_an_error(self):
        with pytest.raises(PhaseUndefinedError):
            noncyclic_berry_phase(0.5, 0.0, np.pi)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            noncyclic_berry_phase(0.5, 0.0, 1.0, grid_n=50)


class TestJumpDetection:
    def test_linear_case_single_jump(self):
        found = detect_phase_jumps(0.5, 0.0, (0.0, 2.0 * np.pi))
        assert len(found) == 1
        np.testing.assert_allclose(found, [np.pi], atol=1e-12)

    def test_quadratic_case_two_jumps(self):
        found = detect_phase_jumps(-1.0, 0.0, (0.0, 2.0 * np.pi))
        assert len(found) == 2
        np.testing.assert_allclose(found, [np.pi / 2.0, 1.5 * np.pi], atol=1e-12)

    def test_empty_interval(self):
        assert detect_phase_jumps(0.5, 0.0, (0.0, np.pi / 2.0)) == []

    def test_theta0_offset(self):
        found = detect_phase_jumps(0.5, 1.0, (1.0, 1.0 + 2.0 * np.pi))
        np.testing.assert_allclose(found, [np.pi], atol=1e-12)

    def test_negative_range(self):
        found = detect_phase_jumps(0.5, 0.0, (-2.0 * np.pi, 0.0))
        np.testing.assert_allclose(found, [-np.pi], atol=1e-12)


class TestMabPhaseFactor:
    @pytest.mark.parametrize("xi,expected", [(0.5, -1.0), (-1.0, 1.0), (-1.5, -1.0)])
    def test_parity(self, xi, expected):
        assert mab_phase_factor(xi) == expected

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            mab_phase_factor(0.3)


class TestHolonomy:
    def test_enclosing_circle_linear(self):
        res = holonomy_line_integral(0.5, circle_path(radius=2.0))
        assert res.line_integral == pytest.approx(np.pi, abs=1e-9)
        assert res.winding == 1
        assert abs(res.phase_factor - (-1.0)) < 1e-9

    def test_enclosing_circle_quadratic(self):
        res = holonomy_line_integral(-1.0, circle_path(radius=1.0))
        assert res.line_integral == pytest.approx(-2.0 * np.pi, abs=1e-9)
        assert abs(res.phase_factor - 1.0) < 1e-9

    def test_non_enclosing_circle(self):
        res = holonomy_line_integral(0.5, circle_path(radius=1.0, center=(3.0, 0.0)))
        assert res.line_integral == pytest.approx(0.0, abs=1e-9)
        assert res.winding == 0
        assert abs(res.phase_factor - 1.0) < 1e-9

    def test_double_winding(self):
        res = holonomy_line_integral(0.5, circle_path(radius=1.5, windings=2))
        assert res.line_integral == pytest.approx(2.0 * np.pi, abs=1e-9)
        assert res.winding == 2
        assert abs(res.phase_factor - 1.0) < 1e-9

    def test_open_arc(self):
        # quarter circle: polar angle change pi/2, no winding for open paths
        t = np.linspace(0.0, np.pi / 2.0, 200)
        path = PlanarPath(np.stack([np.cos(t), np.sin(t)], axis=1))
        res = holonomy_line_integral(0.5, path)
        assert res.line_integral == pytest.approx(np.pi / 4.0, abs=1e-9)
        assert res.winding is None

    def test_reparametrization_invariance(self):
        a = holonomy_line_integral(0.5, circle_path(radius=2.0, n=360))
        b = holonomy_line_integral(0.5, circle_path(radius=2.0, n=5000))
        assert abs(a.line_integral - b.line_integral) < 1e-9

    def test_deformation_invariance(self):
        t = np.linspace(0.0, 2.0 * np.pi, 1001)
        ellipse = np.stack([3.0 * np.cos(t), 0.8 * np.sin(t)], axis=1)
        ellipse[-1] = ellipse[0]
        res = holonomy_line_integral(0.5, PlanarPath(ellipse, closed=True))
        circ = holonomy_line_integral(0.5, circle_path(radius=1.0))
        assert abs(res.line_integral - circ.line_integral) < 1e-9

    def test_coarse_path_refused(self):
        square = PlanarPath(
            np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]]),
            closed=True,
        )
        with pytest.raises(ValueError, match="too coarse"):
            holonomy_line_integral(0.5, square)

    def test_origin_rejected(self):
        with pytest.raises(SingularityError):
            PlanarPath(np.array([[1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]]))

    def test_closed_flag_requires_closure(self):
        with pytest.raises(ValueError):
            PlanarPath(np.array([[1.0, 0.0], [0.0, 1.0]]), closed=True)


class TestPathCsv:
    def test_round_trip(self, tmp_path):
        f = tmp_path / "path.csv"
        pts = circle_path(radius=2.0, n=90).samples
        f.write_text("x,y\n" + "\n".join(f"{x!r},{y!r}" for x, y in pts) + "\n")
        path = load_path_csv(f)
        assert path.closed
        assert len(path.samples) == len(pts)
        res = holonomy_line_integral(0.5, path)
        assert res.line_integral == pytest.approx(np.pi, abs=1e-9)

    def test_header_required(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1.0,0.0\n0.0,1.0\n")
        with pytest.raises(ValueError, match="header"):
            load_path_csv(f)

    def test_non_numeric_rejected(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("x,y\n1.0,zero\n")
        with pytest.raises(ValueError):
            load_path_csv(f)


class TestCrossModuleIdentity:
    def test_overlap_modulus_squared_equals_envelope(self, rng):
        # |<-(th0)|-(th)>|^2 = (1 + cos 2 xi dtheta)/2 links the phase
        # toolkit to the averaged autocorrelation envelope
        for _ in range(100):
            xi = float(rng.choice([0.5, -1.0]))
            th0 = float(rng.uniform(-3.0, 3.0))
            dth = float(rng.uniform(-3.0 * np.pi, 3.0 * np.pi))
            modulus = abs(np.vdot(bo_state(th0, xi), bo_state(th0 + dth, xi)))
            cb, _ = averaged_closed_form(ModelParams(1.0, xi), dth)
            assert abs(modulus**2 - cb) < 1e-12
