import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import ai_zeros

from eigenshift.errors import DomainError, StructureError
from eigenshift.ground_state import Domain, Grid, solve_ground_state
from eigenshift.potentials import make_potential
from eigenshift.sensitivity import (
    compute_sensitivity,
    fd_derivatives,
    find_nodal_point,
    integrate_vprime_weighted,
    lambda_ddot,
    lambda_dot_flux,
    lambda_dot_integral,
    orthogonality_residual,
    solve_u_dot,
    u_dot_flux_left,
)

NEG_INF = float("-inf")
PI = math.pi
PI2 = PI * PI
AIRY_ZERO = float(ai_zeros(1)[0][0])


def closed_form_u_dot(x):
    """d/dt of sqrt(2/t) sin(pi x / t) at t = 1."""
    return -(math.sqrt(2) / 2) * np.sin(PI * x) - math.sqrt(2) * PI * x * np.cos(PI * x)


@pytest.fixture(scope="module")
def free_bundle():
    spec = make_potential("affine")
    gs = solve_ground_state(spec, Domain(0.0, 1.0), 2001)
    return spec, gs, compute_sensitivity(gs, spec)


@pytest.fixture(scope="module")
def airy_bundle():
    spec = make_potential("affine", c1=-1.0)
    gs = solve_ground_state(spec, Domain(NEG_INF, 2.0), 8001)
    return spec, gs, compute_sensitivity(gs, spec)


class TestLambdaDotFlux:
    def test_free_t1(self, free_bundle):
        _, _, sens = free_bundle
        # d/dt (pi^2 / t^2) at t = 1
        assert sens.lambda_dot_flux == pytest.approx(-2 * PI2, rel=1e-4)

    def test_free_t2(self):
        spec = make_potential("affine")
        gs = solve_ground_state(spec, Domain(0.0, 2.0), 2001)
        assert lambda_dot_flux(gs) == pytest.approx(-PI2 / 4, rel=1e-4)

    def test_airy_slope_is_minus_one(self, airy_bundle):
        _, _, sens = airy_bundle
        assert sens.lambda_dot_flux == pytest.approx(-1.0, abs=5e-5)

    def test_always_negative(self, free_bundle):
        _, gs, _ = free_bundle
        assert lambda_dot_flux(gs) < 0


class TestLambdaDotIntegral:
    def test_free_reduces_to_left_flux(self, free_bundle):
        spec, gs, _ = free_bundle
        # V' = 0, so the integral route is exactly -u_x(0)^2
        assert lambda_dot_integral(gs, spec) == pytest.approx(-gs.flux_a**2, rel=1e-14)

    def test_constant_slope_gives_normalization(self, airy_bundle):
        spec, gs, _ = airy_bundle
        # V' = -1 and no boundary term: the integral is -||u||^2 = -1
        val = lambda_dot_integral(gs, spec)
        assert val == pytest.approx(-1.0, abs=1e-9)

    def test_agrees_with_flux_route(self):
        spec = make_potential("quadratic", c2=1.0)
        gs = solve_ground_state(spec, Domain(NEG_INF, 0.0), 8001)
        flux = lambda_dot_flux(gs)
        integ = lambda_dot_integral(gs, spec)
        assert abs(flux - integ) <= 1e-5 * (1 + abs(flux))


class TestKinkAwareQuadrature:
    def test_smooth_matches_plain_trapezoid(self):
        spec = make_potential("quadratic", c2=1.0)
        grid = Grid.build(-1.0, 1.0, 199)
        w = np.cos(grid.x) ** 2
        plain = np.trapezoid(2.0 * grid.x * w, grid.x)
        assert integrate_vprime_weighted(spec, grid, w) == pytest.approx(plain, rel=1e-13)

    def test_kink_on_node(self):
        # integral of sign(x) * 1 over [-1, 1] must vanish exactly
        spec = make_potential("abs_shift")
        grid = Grid.build(-1.0, 1.0, 199)   # 0 is a node
        w = np.ones_like(grid.x)
        assert integrate_vprime_weighted(spec, grid, w) == pytest.approx(0.0, abs=1e-14)

    def test_kink_between_nodes(self):
        # integral of d|x-s|/dx over [0, 1] with s strictly inside a cell:
        # exact value is (1 - s) - s = 1 - 2s for weight 1
        s = 0.30001
        spec = make_potential("abs_shift", shift=s)
        grid = Grid.build(0.0, 1.0, 99)
        w = np.ones_like(grid.x)
        got = integrate_vprime_weighted(spec, grid, w)
        assert got == pytest.approx(1 - 2 * s, abs=1e-12)


class TestUDot:
    def test_endpoint_datum(self, free_bundle):
        _, gs, sens = free_bundle
        assert sens.u_dot[-1] == -gs.flux_t
        assert sens.u_dot[0] == 0.0

    def test_orthogonality_enforced(self, free_bundle):
        _, gs, sens = free_bundle
        assert sens.orth_residual <= 1e-12

    def test_matches_closed_form_pointwise(self, free_bundle):
        _, gs, sens = free_bundle
        exact = closed_form_u_dot(gs.grid.x)
        err = np.max(np.abs(sens.u_dot - exact))
        # second-order accurate: measured about 15 h^2
        assert err <= 60 * gs.grid.h**2

    def test_convergence_is_second_order(self):
        spec = make_potential("affine")
        errs = []
        for N in (250, 500, 1000):
            gs = solve_ground_state(spec, Domain(0.0, 1.0), N)
            ud = solve_u_dot(gs, lambda_dot_flux(gs), spec)
            errs.append(np.max(np.abs(ud - closed_form_u_dot(gs.grid.x))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.25)


class TestNodalPoint:
    def test_free_matches_root_of_closed_form(self, free_bundle):
        _, _, sens = free_bundle
        root = brentq(closed_form_u_dot, 0.51, 0.99, xtol=1e-14)
        assert sens.t0 == pytest.approx(root, abs=1e-6)

    def test_sign_pattern_negative_then_positive(self, free_bundle):
        _, gs, sens = free_bundle
        interior = sens.u_dot[1:-1]
        band = 1e-9 * np.max(np.abs(sens.u_dot))
        idx = np.nonzero(np.abs(interior) > band)[0]
        signs = np.sign(interior[idx])
        assert signs[0] == -1 and signs[-1] == 1

    def test_interior(self, free_bundle):
        _, gs, sens = free_bundle
        assert gs.domain.a_eff < sens.t0 < gs.domain.t

    def test_rejects_no_sign_change(self):
        grid = Grid.build(0.0, 1.0, 50)
        with pytest.raises(StructureError):
            find_nodal_point(np.linspace(0.1, 1.0, 52), grid)

    def test_rejects_multiple_sign_changes(self):
        grid = Grid.build(0.0, 1.0, 200)
        wiggle = np.sin(3 * PI * grid.x)
        with pytest.raises(StructureError):
            find_nodal_point(wiggle, grid)


class TestLambdaDdot:
    def test_free_is_six_pi_squared(self, free_bundle):
        spec, gs, sens = free_bundle
        # V' = 0 kills the integral; only the boundary term survives and the
        # closed form d^2/dt^2 (pi^2/t^2) at t = 1 is 6 pi^2
        assert sens.lambda_ddot == pytest.approx(6 * PI2, rel=1e-3)

    def test_airy_is_exactly_zero(self, airy_bundle):
        _, _, sens = airy_bundle
        assert sens.lambda_ddot == 0.0

    def test_convex_well_positive(self):
        spec = make_potential("quadratic", c2=1.0)
        gs = solve_ground_state(spec, Domain(NEG_INF, 0.0), 2001)
        sens = compute_sensitivity(gs, spec, with_fd=False)
        assert sens.lambda_ddot > 0.1

    def test_concave_tilt_negative(self):
        spec = make_potential("neg_abs", slope=2.0, amp=1.0)
        gs = solve_ground_state(spec, Domain(NEG_INF, 1.0), 2001)
        sens = compute_sensitivity(gs, spec, with_fd=False)
        assert sens.lambda_ddot < -0.1

    def test_boundary_term_sign_at_finite_a(self, free_bundle):
        spec, gs, sens = free_bundle
        udxa = u_dot_flux_left(sens.u_dot, gs.grid)
        assert udxa <= 1e-8    # nonpositive, so -2 flux_a * udxa >= 0
        assert udxa == pytest.approx(-1.5 * math.sqrt(2) * PI, rel=1e-3)


class TestFiniteDifferences:
    def test_free_first_and_second(self):
        spec = make_potential("affine")
        ld, ldd = fd_derivatives(spec, 0.0, 1.0, 1e-3, 2001)
        assert ld == pytest.approx(-2 * PI2, rel=1e-4)
        assert ldd == pytest.approx(6 * PI2, rel=1e-3)

    def test_airy_second_derivative_vanishes(self):
        spec = make_potential("affine", c1=-1.0)
        gs = solve_ground_state(spec, Domain(NEG_INF, 2.0), 4001)
        _, ldd = fd_derivatives(spec, NEG_INF, 2.0, 0.03, 4001,
                                a_eff=gs.domain.a_eff)
        assert abs(ldd) <= 1e-6

    def test_step_reaching_the_wall_rejected(self):
        spec = make_potential("affine")
        with pytest.raises(DomainError):
            fd_derivatives(spec, 0.0, 1.0, 1.5, 301)

    def test_oracle_agreement_bundle(self, free_bundle):
        _, _, sens = free_bundle
        assert abs(sens.lambda_dot_flux - sens.lambda_dot_fd) <= \
            max(1e-4 * abs(sens.lambda_dot_fd), 10 * sens.fd_step**2)
        assert abs(sens.lambda_ddot - sens.lambda_ddot_fd) <= \
            max(1e-2 * abs(sens.lambda_ddot_fd), 1e-4 * (1 + abs(sens.lam)))
        assert sens.fd_err_dot < 1e-3 and sens.fd_err_ddot < 1e-2


class TestSensitivityBundle:
    def test_metadata_keys(self, free_bundle):
        from eigenshift.sensitivity import sensitivity_metadata
        _, _, sens = free_bundle
        assert set(sensitivity_metadata(sens)) == {
            "t", "lambda", "lambda_dot_flux", "lambda_dot_integral",
            "lambda_ddot", "lambda_dot_fd", "lambda_ddot_fd", "t0",
            "orth_residual",
        }

    def test_orthogonality_helper_matches(self, free_bundle):
        _, gs, sens = free_bundle
        assert orthogonality_residual(gs, sens.u_dot) == sens.orth_residual
