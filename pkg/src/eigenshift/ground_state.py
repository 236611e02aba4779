"""Dirichlet ground states of -u'' + V u on (a, t).

The operator is discretized by second-order central differences on a uniform
grid; the smallest eigenvalue is found by Sturm bisection plus inverse
iteration (see tridiag).  A left endpoint at -infinity is realized by a
truncation wall placed deep in the classically forbidden region and validated
by a doubling convergence check.

Grid convention: N counts interior nodes, so the grid has N+2 nodes including
both Dirichlet endpoints and spacing h = (t - a_eff) / (N + 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfinementError,
    ConvergenceError,
    DomainError,
    StructureError,
    TruncationError,
)
from .potentials import PotentialSpec, eval_V, validate_confinement
from .tolerances import DEFAULT_TOLS, Tolerances
from .tridiag import TridiagOperator, bisect_smallest, inverse_iteration

MIN_INTERIOR = 16


@dataclass(frozen=True)
class Domain:
    """Interval (a, t] with a finite or -inf, plus the effective left wall.

    ``a_eff`` equals ``a`` when a is finite; for a = -inf it is the truncation
    abscissa, or None until resolved by the solver.
    """

    a: float
    t: float
    a_eff: float = None

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise DomainError("right endpoint t must be finite")
        if not self.a < self.t:
            raise DomainError(f"need a < t, got a={self.a}, t={self.t}")
        if math.isfinite(self.a):
            if self.a_eff is None:
                object.__setattr__(self, "a_eff", self.a)
            elif self.a_eff != self.a:
                raise DomainError("a_eff must equal a for a finite left endpoint")
        elif self.a_eff is not None and not self.a_eff < self.t:
            raise DomainError("truncation wall a_eff must lie left of t")

    @property
    def resolved(self) -> bool:
        return self.a_eff is not None

    @property
    def unbounded_left(self) -> bool:
        return not math.isfinite(self.a)

    def with_wall(self, a_eff: float) -> "Domain":
        return Domain(self.a, self.t, a_eff)


@dataclass(frozen=True)
class Grid:
    """Uniform grid x[0] = a_eff < ... < x[N+1] = t with N interior nodes."""

    x: np.ndarray
    h: float

    @property
    def n_interior(self) -> int:
        return len(self.x) - 2

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]

    @classmethod
    def build(cls, a_eff: float, t: float, N: int) -> "Grid":
        if N < 1:
            raise DomainError("need at least one interior node")
        x, h = np.linspace(a_eff, t, N + 2, retstep=True)
        return cls(x=x, h=float(h))


@dataclass(frozen=True)
class GroundState:
    """Normalized positive ground state with energy and endpoint fluxes.

    ``u`` lives on the full grid, extended by 0 at both Dirichlet endpoints.
    ``flux_a``/``flux_t`` are one-sided three-point derivatives at the ends,
    ``residual`` the discrete L2 norm of (-D2 + V - lambda) u.
    """

    domain: Domain
    grid: Grid
    lam: float
    u: np.ndarray
    flux_a: float
    flux_t: float
    residual: float
    quad_norm: float

    @property
    def t(self) -> float:
        return self.domain.t


def discretize(spec: PotentialSpec, domain: Domain, N: int) -> TridiagOperator:
    """Central-difference Dirichlet discretization on N interior nodes.

    Diagonal 2/h^2 + V(x_i), off-diagonal -1/h^2; symmetric tridiagonal.
    """
    if not domain.resolved:
        raise DomainError("domain has no resolved left wall; truncate first")
    grid = Grid.build(domain.a_eff, domain.t, N)
    return _operator_on(spec, grid)


def _operator_on(spec: PotentialSpec, grid: Grid) -> TridiagOperator:
    h2 = grid.h * grid.h
    d = 2.0 / h2 + np.asarray(eval_V(spec, grid.interior), dtype=float)
    if not np.all(np.isfinite(d)):
        raise DomainError("potential is not finite on the working grid")
    e = np.full(grid.n_interior - 1, -1.0 / h2)
    return TridiagOperator(d=d, e=e)


def _start_profile(grid: Grid) -> np.ndarray:
    xi = (grid.interior - grid.x[0]) / (grid.x[-1] - grid.x[0])
    return np.sin(np.pi * xi)


def _solve_on_grid(spec: PotentialSpec, grid: Grid, tols: Tolerances,
                   warm_vector=None, warm_bracket=None):
    op = _operator_on(spec, grid)
    lo, hi = bisect_smallest(op, rtol=tols.bisect, bracket=warm_bracket)
    sigma = 0.5 * (lo + hi)
    x0 = warm_vector if warm_vector is not None else _start_profile(grid)
    lam, vec, resid = inverse_iteration(op, sigma, x0=x0)

    # confirm we hold the smallest eigenvalue: no spectrum below lam - eps.
    # eps must clear the Sturm count's own resolution, a few ulps of ||T||.
    scale = float(np.max(np.abs(op.d))) + 2.0 * (float(np.max(np.abs(op.e))) if op.n > 1 else 0.0)
    eps_gap = max(4.0 * (hi - lo) + 1e-10 * (1.0 + abs(lam)),
                  256.0 * np.finfo(float).eps * scale)
    if op.count_below(lam - eps_gap) != 0:
        raise ConvergenceError("converged to an excited state, not the ground state")

    cap = max(tols.res * (1.0 + abs(lam)), 64.0 * np.finfo(float).eps * scale)
    if resid > cap:
        raise ConvergenceError(f"eigen-residual {resid:.3e} above cap {cap:.3e}")

    if vec[int(np.argmax(np.abs(vec)))] < 0:
        vec = -vec
    vmax = float(vec.max())
    if vmax <= 0 or float(vec.min()) < -tols.pos * vmax:
        raise StructureError("ground-state vector is not positive on the interior")
    return op, lam, vec, resid


def solve_ground_state(spec: PotentialSpec, domain: Domain, N: int,
                       tols: Tolerances = DEFAULT_TOLS,
                       warm_vector=None, warm_bracket=None) -> GroundState:
    """Compute the positive L2-normalized Dirichlet ground state.

    For a = -inf the wall is resolved by truncate_domain (unless the Domain
    already carries one).  ``warm_vector``/``warm_bracket`` optionally seed the
    eigensolve; they affect speed only, never the result beyond solver
    tolerance.

    Raises ConfinementError when a = -inf and V does not grow on the left,
    ConvergenceError when the eigensolve fails its own checks.
    """
    if N < MIN_INTERIOR:
        raise DomainError(f"N must be at least {MIN_INTERIOR}")
    if domain.unbounded_left and not domain.resolved:
        if not validate_confinement(spec, domain.a):
            raise ConfinementError(
                "V does not tend to +infinity as x -> -infinity; "
                "no ground state on a half-infinite domain"
            )
        probe = _probe_lambda(spec, domain.t)
        domain = domain.with_wall(truncate_domain(spec, domain.t, probe, tols=tols))

    grid = Grid.build(domain.a_eff, domain.t, N)
    op, lam, vec, resid = _solve_on_grid(spec, grid, tols,
                                         warm_vector=warm_vector,
                                         warm_bracket=warm_bracket)
    h = grid.h
    u = np.zeros(N + 2)
    u[1:-1] = vec / math.sqrt(h)

    quad_norm = float(math.sqrt(np.trapezoid(u * u, grid.x)))
    flux_a = (4.0 * u[1] - u[2]) / (2.0 * h)
    flux_t = (u[-3] - 4.0 * u[-2]) / (2.0 * h)
    return GroundState(domain=domain, grid=grid, lam=lam, u=u,
                       flux_a=float(flux_a), flux_t=float(flux_t),
                       residual=resid, quad_norm=quad_norm)


def _probe_lambda(spec: PotentialSpec, t: float, width: float = 4.0,
                  n: int = 200) -> float:
    """Cheap over-estimate of lambda(t): solve on the clipped domain (t-width, t).

    Restricting the domain can only raise the ground energy, so the probe is a
    safe input for the wall-placement threshold.
    """
    grid = Grid.build(t - width, t, n)
    op = _operator_on(spec, grid)
    lo, hi = bisect_smallest(op, rtol=1e-10)
    return 0.5 * (lo + hi)


def truncate_domain(spec: PotentialSpec, t: float, lambda_probe: float,
                    tols: Tolerances = DEFAULT_TOLS, n_check: int = 800,
                    max_doublings: int = 40) -> float:
    """Place the artificial wall for a = -inf.

    Returns a_eff with V(a_eff) >= lambda_probe + margin such that doubling
    the wall distance moves the computed ground energy by less than the
    truncation tolerance.  Found by leftward geometric search.
    """
    threshold = lambda_probe + tols.margin
    dist = max(1.0, abs(t) * 0.5)
    for _ in range(max_doublings):
        if eval_V(spec, t - dist) >= threshold:
            break
        dist *= 2.0
    else:
        raise TruncationError("no wall with V >= lambda + margin within search cap")

    for _ in range(max_doublings):
        lam_1 = _wall_lambda(spec, t, dist, n_check, tols)
        # 2n+1 interior nodes keep h identical, so the h^2 error cancels
        lam_2 = _wall_lambda(spec, t, 2.0 * dist, 2 * n_check + 1, tols)
        if abs(lam_1 - lam_2) < tols.trunc:
            return t - dist
        dist *= 2.0
        if eval_V(spec, t - dist) < threshold:
            raise TruncationError("potential dips below threshold while doubling")
    raise TruncationError("doubling convergence check did not stabilize")


def _wall_lambda(spec: PotentialSpec, t: float, dist: float, n: int,
                 tols: Tolerances) -> float:
    # same h at both wall distances so discretization error cancels in the check
    grid = Grid.build(t - dist, t, n)
    op = _operator_on(spec, grid)
    lo, hi = bisect_smallest(op, rtol=tols.bisect)
    lam, _, _ = inverse_iteration(op, 0.5 * (lo + hi), x0=_start_profile(grid))
    return lam


def rayleigh_energy(gs: GroundState, spec: PotentialSpec) -> float:
    """Discrete energy: forward-difference gradient term plus trapezoid V term.

    Coincides with gs.lam up to roundoff by the summation-by-parts identity of
    the central-difference operator.
    """
    u, x, h = gs.u, gs.grid.x, gs.grid.h
    kinetic = float(np.sum(np.diff(u) ** 2) / h)
    potential = float(np.trapezoid(np.asarray(eval_V(spec, x)) * u * u, x))
    return kinetic + potential


def richardson_lambda(spec: PotentialSpec, domain: Domain, N: int,
                      tols: Tolerances = DEFAULT_TOLS) -> tuple:
    """Eliminate the O(h^2) eigenvalue error from solves at h and h/2.

    Returns (lambda_extrapolated, gs_coarse, gs_fine); 2N+1 interior nodes
    exactly halve the spacing.
    """
    coarse = solve_ground_state(spec, domain, N, tols=tols)
    fine_domain = coarse.domain  # reuse the resolved wall
    fine = solve_ground_state(spec, fine_domain, 2 * N + 1, tols=tols)
    lam = (4.0 * fine.lam - coarse.lam) / 3.0
    return lam, coarse, fine


def ground_state_metadata(gs: GroundState) -> dict:
    return {
        "lambda": gs.lam,
        "flux_a": gs.flux_a,
        "flux_t": gs.flux_t,
        "residual": gs.residual,
        "N": gs.grid.n_interior,
        "a_eff": gs.domain.a_eff,
        "t": gs.domain.t,
    }


def write_ground_state_csv(gs: GroundState, path) -> None:
    _write_columns_csv(path, "x,u", gs.grid.x, gs.u)


def write_ground_state_json(gs: GroundState, path) -> None:
    with open(path, "w") as fh:
        json.dump(ground_state_metadata(gs), fh, indent=2)
        fh.write("\n")


def _write_columns_csv(path, header: str, *cols) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")
