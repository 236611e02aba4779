"""Derivatives of the ground energy with respect to the moving right endpoint.

Two independent first-derivative routes are implemented: the boundary-flux
identity (minus the squared outward derivative at t) and the potential-slope
integral (integral of V' u^2 minus the squared flux at a finite left end).
The derivative field u_dot solves the shifted eigenproblem with inhomogeneous
boundary data; since the shifted operator is singular with kernel u, the
discrete system is solved in bordered (saddle) form, which enforces the
discrete orthogonality of u_dot to u exactly.  The second derivative is
evaluated from u_dot and the nodal point of its single sign change, and both
derivatives are cross-checked against central finite differences in t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructureError
from .ground_state import (
    Domain,
    Grid,
    GroundState,
    _operator_on,
    _write_columns_csv,
    solve_ground_state,
)
from .potentials import PotentialSpec, eval_Vprime, eval_Vprime_sided, vprime_kinks
from .tolerances import DEFAULT_TOLS, Tolerances
from .tridiag import solve_bordered


@dataclass(frozen=True)
class Sensitivity:
    """First and second endpoint derivatives with their diagnostics."""

    t: float
    lam: float
    lambda_dot_flux: float
    lambda_dot_integral: float
    u_dot: np.ndarray
    t0: float
    lambda_ddot: float
    lambda_dot_fd: float
    lambda_ddot_fd: float
    orth_residual: float
    fd_step: float
    fd_err_dot: float    # Richardson estimate of the FD truncation error
    fd_err_ddot: float


def lambda_dot_flux(gs: GroundState) -> float:
    """First derivative from the boundary flux: -(u_x(t))^2, strictly negative."""
    return -gs.flux_t * gs.flux_t


def lambda_dot_integral(gs: GroundState, spec: PotentialSpec) -> float:
    """First derivative from the potential slope: integral of V' u^2, minus
    u_x(a)^2 when the left endpoint is finite (omitted for a = -inf)."""
    val = integrate_vprime_weighted(spec, gs.grid, gs.u * gs.u)
    if not gs.domain.unbounded_left:
        val -= gs.flux_a * gs.flux_a
    return val


def integrate_vprime_weighted(spec: PotentialSpec, grid: Grid, w: np.ndarray,
                              shift: float = 0.0) -> float:
    """Trapezoid quadrature of (V'(x) - shift) * w(x) on the grid.

    V' may jump at kinks of a piecewise-C1 potential; each cell uses the
    one-sided limits valid inside it, and a cell containing a kink strictly
    inside is split at the kink with w interpolated linearly.  Away from kinks
    this is the plain trapezoid rule.
    """
    x, h = grid.x, grid.h
    vp_left_end = np.asarray(eval_Vprime_sided(spec, x[:-1], "right")) - shift
    vp_right_end = np.asarray(eval_Vprime_sided(spec, x[1:], "left")) - shift
    cells = 0.5 * h * (vp_left_end * w[:-1] + vp_right_end * w[1:])
    total = float(np.sum(cells))

    for xi in vprime_kinks(spec):
        if not x[0] < xi < x[-1]:
            continue
        i = int(np.searchsorted(x, xi, side="right")) - 1
        if xi == x[i] or i + 1 >= len(x):
            continue  # kink sits on a node: the sided limits above are exact
        frac = (xi - x[i]) / h
        w_xi = w[i] + frac * (w[i + 1] - w[i])
        vm = eval_Vprime_sided(spec, xi, "left") - shift
        vp = eval_Vprime_sided(spec, xi, "right") - shift
        left = 0.5 * (xi - x[i]) * (vp_left_end[i] * w[i] + vm * w_xi)
        right = 0.5 * (x[i + 1] - xi) * (vp * w_xi + vp_right_end[i] * w[i + 1])
        total += left + right - float(cells[i])
    return total


def solve_u_dot(gs: GroundState, lambda_dot: float, spec: PotentialSpec,
                tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Derivative of the eigenfunction with respect to the right endpoint.

    Solves the shifted equation with source lambda_dot * u and boundary data
    0 at the left end and -u_x(t) at t (lifted into the right-hand side).
    The singular system is augmented with u as constraint row/column, so the
    returned field satisfies the discrete orthogonality to u exactly.
    Returns u_dot on all grid nodes including the endpoint values.
    """
    grid, h = gs.grid, gs.grid.h
    op = _operator_on(spec, grid)
    u_int = gs.u[1:-1]
    beta = -gs.flux_t
    rhs = lambda_dot * u_int
    rhs[-1] += beta / (h * h)
    interior, _mu = solve_bordered(op, gs.lam, u_int, rhs)
    # remove the roundoff left on the constraint row; the correction runs
    # along the kernel of the shifted operator, so the other equations keep
    # their residual
    interior -= (u_int @ interior) / (u_int @ u_int) * u_int
    return np.concatenate(([0.0], interior, [beta]))


def orthogonality_residual(gs: GroundState, u_dot: np.ndarray) -> float:
    """|trapezoid integral of u * u_dot| (u vanishes at both endpoints)."""
    return abs(float(np.trapezoid(gs.u * u_dot, gs.grid.x)))


def find_nodal_point(u_dot: np.ndarray, grid: Grid,
                     tols: Tolerances = DEFAULT_TOLS) -> float:
    """Locate the unique interior sign change of u_dot.

    Values within the dead band tol_sign * max|u_dot| are ignored as roundoff
    (the field decays below floating-point resolution near a deep truncation
    wall).  Raises StructureError when the significant values change sign
    zero times or more than once, which signals a numerical fault.
    """
    interior = u_dot[1:-1]
    band = tols.sign * float(np.max(np.abs(u_dot)))
    idx = np.nonzero(np.abs(interior) > band)[0]
    if len(idx) == 0:
        raise StructureError("u_dot vanishes on the whole interior")
    signs = np.sign(interior[idx])
    flips = np.nonzero(signs[:-1] != signs[1:])[0]
    if len(flips) != 1:
        raise StructureError(
            f"u_dot has {len(flips)} interior sign changes, expected exactly 1"
        )
    ineg, ipos = idx[flips[0]], idx[flips[0] + 1]
    x1, x2 = grid.interior[ineg], grid.interior[ipos]
    y1, y2 = interior[ineg], interior[ipos]
    return float(x1 - y1 * (x2 - x1) / (y2 - y1))


def lambda_ddot(gs: GroundState, u_dot: np.ndarray, t0: float,
                spec: PotentialSpec) -> float:
    """Second endpoint derivative of the ground energy.

    Twice the integral of (V'(x) - V'(t0)) u u_dot, plus the boundary term
    -2 u_x(a) u_dot_x(a) at a finite left endpoint (omitted for a = -inf).
    """
    val = 2.0 * integrate_vprime_weighted(spec, gs.grid, gs.u * u_dot,
                                          shift=eval_Vprime(spec, t0))
    if not gs.domain.unbounded_left:
        val -= 2.0 * gs.flux_a * u_dot_flux_left(u_dot, gs.grid)
    return val


def u_dot_flux_left(u_dot: np.ndarray, grid: Grid) -> float:
    """One-sided three-point derivative of u_dot at the left wall."""
    return float((-3.0 * u_dot[0] + 4.0 * u_dot[1] - u_dot[2]) / (2.0 * grid.h))


def fd_derivatives(spec: PotentialSpec, a: float, t: float, h_t: float, N: int,
                   tols: Tolerances = DEFAULT_TOLS, a_eff: float = None) -> tuple:
    """Central finite differences of lambda in t: independent derivative oracle.

    Three ground-state solves at t - h_t, t, t + h_t share a single left wall
    (resolved here for a = -inf unless ``a_eff`` is supplied).
    """
    if a_eff is None:
        if math.isfinite(a):
            a_eff = a
        else:
            # resolve the wall at t - h_t, where lambda is largest
            gs0 = solve_ground_state(spec, Domain(a, t - h_t), N, tols=tols)
            a_eff = gs0.domain.a_eff
    if not t - h_t > a_eff:
        raise DomainError("FD step reaches past the left wall")

    lams = [
        solve_ground_state(spec, Domain(a, ti, a_eff) if not math.isfinite(a)
                           else Domain(a, ti), N, tols=tols).lam
        for ti in (t - h_t, t, t + h_t)
    ]
    ld = (lams[2] - lams[0]) / (2.0 * h_t)
    ldd = (lams[2] - 2.0 * lams[1] + lams[0]) / (h_t * h_t)
    return ld, ldd


def compute_sensitivity(gs: GroundState, spec: PotentialSpec,
                        tols: Tolerances = DEFAULT_TOLS,
                        h_t: float = None, fd_N: int = None,
                        with_fd: bool = True) -> Sensitivity:
    """Full derivative bundle for one solved ground state.

    The u_dot solve takes its source term from the flux formula (the coupled
    system), never from the FD estimate, which stays a pure cross-check.  The
    FD pass is repeated at half the step; the Richardson combination of the
    two gives the stored truncation-error estimates.
    """
    ld_flux = lambda_dot_flux(gs)
    ld_int = lambda_dot_integral(gs, spec)
    u_dot = solve_u_dot(gs, ld_flux, spec, tols=tols)
    orth = orthogonality_residual(gs, u_dot)
    t0 = find_nodal_point(u_dot, gs.grid, tols=tols)
    ldd = lambda_ddot(gs, u_dot, t0, spec)

    ld_fd = ldd_fd = err_dot = err_ddot = math.nan
    step = math.nan
    if with_fd:
        step = h_t if h_t is not None else tols.h_t_factor * (gs.t - gs.domain.a_eff)
        n_fd = fd_N if fd_N is not None else gs.grid.n_interior
        a_eff = gs.domain.a_eff if gs.domain.unbounded_left else None
        ld_fd, ldd_fd = fd_derivatives(spec, gs.domain.a, gs.t, step, n_fd,
                                       tols=tols, a_eff=a_eff)
        ld_half, ldd_half = fd_derivatives(spec, gs.domain.a, gs.t, 0.5 * step,
                                           n_fd, tols=tols, a_eff=a_eff)
        err_dot = abs(ld_half - ld_fd) * 4.0 / 3.0
        err_ddot = abs(ldd_half - ldd_fd) * 4.0 / 3.0

    return Sensitivity(
        t=gs.t, lam=gs.lam,
        lambda_dot_flux=ld_flux, lambda_dot_integral=ld_int,
        u_dot=u_dot, t0=t0, lambda_ddot=ldd,
        lambda_dot_fd=ld_fd, lambda_ddot_fd=ldd_fd,
        orth_residual=orth, fd_step=step,
        fd_err_dot=err_dot, fd_err_ddot=err_ddot,
    )


def sensitivity_metadata(sens: Sensitivity) -> dict:
    return {
        "t": sens.t,
        "lambda": sens.lam,
        "lambda_dot_flux": sens.lambda_dot_flux,
        "lambda_dot_integral": sens.lambda_dot_integral,
        "lambda_ddot": sens.lambda_ddot,
        "lambda_dot_fd": sens.lambda_dot_fd,
        "lambda_ddot_fd": sens.lambda_ddot_fd,
        "t0": sens.t0,
        "orth_residual": sens.orth_residual,
    }


def write_sensitivity_json(sens: Sensitivity, path) -> None:
    with open(path, "w") as fh:
        json.dump(sensitivity_metadata(sens), fh, indent=2)
        fh.write("\n")


def write_u_dot_csv(sens: Sensitivity, grid: Grid, path) -> None:
    _write_columns_csv(path, "x,u_dot", grid.x, sens.u_dot)
