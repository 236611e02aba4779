"""Ground-energy curve over a grid of right endpoints, with theorem verdicts.

The sweep reuses a single truncation wall (chosen at the smallest t, where the
energy is largest) so that second differences in t are not polluted by
truncation jitter, and warm-starts each eigensolve from the previous endpoint.
Verdicts render the global claims -- strict decrease, convexity for convex
potentials, concavity for concave potentials on half-infinite domains, and the
blow-up rate at the left endpoint -- as machine-checkable booleans.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfinementError, DomainError, EigenshiftError
from .ground_state import Domain, GroundState, _probe_lambda, solve_ground_state, truncate_domain
from .potentials import ConvexityClass, PotentialSpec, validate_confinement
from .sensitivity import lambda_dot_flux
from .tolerances import DEFAULT_TOLS, Tolerances


@dataclass(frozen=True)
class SweepResult:
    """Sampled energy curve lambda(t) with derivative and curvature columns."""

    ts: np.ndarray
    lambdas: np.ndarray
    lambda_dots: np.ndarray
    second_diffs: np.ndarray   # (lam[i-1] - 2 lam[i] + lam[i+1]) / dt^2
    a: float
    a_eff: float
    N: int
    tol_thm: float

    @property
    def monotone_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.lambdas) < 0))

    @property
    def convex_in_t(self) -> bool:
        return bool(np.all(self.second_diffs >= -self.tol_thm))

    @property
    def concave_in_t(self) -> bool:
        return bool(np.all(self.second_diffs <= self.tol_thm))

    @property
    def verdict(self) -> dict:
        return {
            "monotone_decreasing": self.monotone_decreasing,
            "convex_in_t": self.convex_in_t,
            "concave_in_t": self.concave_in_t,
        }


@dataclass(frozen=True)
class TheoremVerdict:
    """Sweep verdicts next to the expectations raised by the convexity class."""

    monotone_decreasing: bool
    convex_in_t: bool
    concave_in_t: bool
    expect_convex: bool
    expect_concave: bool

    @property
    def ok(self) -> bool:
        if not self.monotone_decreasing:
            return False
        if self.expect_convex and not self.convex_in_t:
            return False
        if self.expect_concave and not self.concave_in_t:
            return False
        return True

    def as_dict(self) -> dict:
        return {
            "monotone_decreasing": self.monotone_decreasing,
            "convex_in_t": self.convex_in_t,
            "concave_in_t": self.concave_in_t,
            "expect_convex": self.expect_convex,
            "expect_concave": self.expect_concave,
            "ok": self.ok,
        }


def sweep(spec: PotentialSpec, a: float, t_min: float, t_max: float,
          n_t: int, N: int, tols: Tolerances = DEFAULT_TOLS,
          warm_start: bool = True, a_eff: float = None) -> SweepResult:
    """Compute lambda(t) on a uniform endpoint grid.

    One wall ``a_eff`` serves the whole sweep (resolved at t_min unless
    supplied).  With ``warm_start`` each solve is seeded with the previous
    eigenvector interpolated onto the new grid and a bracket predicted from
    the flux derivative; cold starts give the same curve within solver
    tolerance.  Solver failures propagate with the failing t attached.
    """
    if n_t < 5:
        raise DomainError("sweep needs at least 5 endpoint samples")
    if not (a < t_min < t_max):
        raise DomainError(f"need a < t_min < t_max, got {a}, {t_min}, {t_max}")
    unbounded = not math.isfinite(a)
    if unbounded and a_eff is None:
        if not validate_confinement(spec, a):
            raise ConfinementError("potential not confining at -infinity")
        a_eff = truncate_domain(spec, t_min, _probe_lambda(spec, t_min), tols=tols)

    ts = np.linspace(t_min, t_max, n_t)
    dt = float(ts[1] - ts[0])
    lambdas = np.empty(n_t)
    lambda_dots = np.empty(n_t)
    prev: GroundState = None
    for i, t in enumerate(ts):
        domain = Domain(a, float(t), a_eff if unbounded else None)
        warm_vec = warm_bracket = None
        if warm_start and prev is not None:
            grid_x = np.linspace(domain.a_eff, t, N + 2)[1:-1]
            warm_vec = np.interp(grid_x, prev.grid.x, prev.u)
            predicted = prev.lam + lambda_dots[i - 1] * dt
            pad = 4.0 * abs(lambda_dots[i - 1]) * dt + 1e-6 * (1.0 + abs(predicted))
            warm_bracket = (predicted - pad, predicted + pad)
        try:
            gs = solve_ground_state(spec, domain, N, tols=tols,
                                    warm_vector=warm_vec, warm_bracket=warm_bracket)
        except EigenshiftError as exc:
            raise type(exc)(f"sweep failed at t={t}: {exc}") from exc
        lambdas[i] = gs.lam
        lambda_dots[i] = lambda_dot_flux(gs)
        prev = gs

    second = (lambdas[:-2] - 2.0 * lambdas[1:-1] + lambdas[2:]) / (dt * dt)
    h_max = (t_max - (a_eff if unbounded else a)) / (N + 1)
    tol_thm = tols.thm_factor * h_max * h_max * float(np.max(np.abs(lambdas)))
    return SweepResult(ts=ts, lambdas=lambdas, lambda_dots=lambda_dots,
                       second_diffs=second, a=a,
                       a_eff=(a_eff if unbounded else a), N=N, tol_thm=tol_thm)


def check_theorem(result: SweepResult, cls: ConvexityClass) -> TheoremVerdict:
    """Raise the expectations the convexity class entitles us to and report.

    Convex V expects a convex curve; concave V expects a concave curve only on
    a half-infinite domain; affine V on a half-infinite domain expects both.
    Monotone decrease is always expected.
    """
    unbounded = not math.isfinite(result.a)
    return TheoremVerdict(
        monotone_decreasing=result.monotone_decreasing,
        convex_in_t=result.convex_in_t,
        concave_in_t=result.concave_in_t,
        expect_convex=cls.is_convex(),
        expect_concave=cls.is_concave() and unbounded,
    )


def chord_tangent_violation(result: SweepResult, orientation: str) -> float:
    """Max violation of the supporting-line property of the sampled curve.

    For a convex curve each flux-formula slope must lie between the adjacent
    chord slopes; ``orientation`` is 'convex' or 'concave' (reversed order).
    Returns the worst violation (0 means the property holds exactly).
    """
    dt = float(result.ts[1] - result.ts[0])
    chords = np.diff(result.lambdas) / dt
    tangents = result.lambda_dots[1:-1]
    if orientation == "convex":
        low, high = chords[:-1], chords[1:]
    elif orientation == "concave":
        low, high = chords[1:], chords[:-1]
    else:
        raise ValueError("orientation must be 'convex' or 'concave'")
    viol = np.maximum(low - tangents, tangents - high)
    return max(0.0, float(np.max(viol)))


def blowup_profile(spec: PotentialSpec, a: float, epsilons, N: int,
                   tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Scaled energies lambda(a + eps) * eps^2 for shrinking intervals.

    As eps -> 0 the values approach pi^2, the free small-interval limit: a
    quantitative refinement of the bare blow-up of lambda near the left end.
    Requires a finite left endpoint and V bounded near it.
    """
    eps = np.asarray(list(epsilons), dtype=float)
    if not math.isfinite(a):
        raise DomainError("blow-up profile needs a finite left endpoint")
    if len(eps) == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DomainError("epsilons must be positive and strictly decreasing")
    out = np.empty(len(eps))
    for i, e in enumerate(eps):
        gs = solve_ground_state(spec, Domain(a, a + float(e)), N, tols=tols)
        out[i] = gs.lam * e * e
    return out


def sweep_rows(result: SweepResult):
    """Rows (t, lambda, lambda_dot, second_diff) with blank curvature at the ends."""
    rows = []
    n = len(result.ts)
    for i in range(n):
        sd = result.second_diffs[i - 1] if 0 < i < n - 1 else math.nan
        rows.append((result.ts[i], result.lambdas[i], result.lambda_dots[i], sd))
    return rows


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,lambda,lambda_dot,second_diff\n")
        for t, lam, ld, sd in sweep_rows(result):
            tail = "" if math.isnan(sd) else f"{sd:.16e}"
            fh.write(f"{t:.16e},{lam:.16e},{ld:.16e},{tail}\n")


def write_verdict_json(result: SweepResult, path, verdict: TheoremVerdict = None) -> None:
    payload = dict(verdict.as_dict() if verdict is not None else result.verdict)
    payload.update({
        "a": ("-inf" if not math.isfinite(result.a) else result.a),
        "a_eff": result.a_eff,
        "t_min": float(result.ts[0]),
        "t_max": float(result.ts[-1]),
        "n_t": len(result.ts),
        "N": result.N,
        "tol_thm": result.tol_thm,
    })
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_plot_columns(path, xs, ys) -> None:
    """Two-column whitespace-separated plot data (gnuplot-compatible)."""
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x:.16e} {y:.16e}\n")
