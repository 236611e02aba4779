"""Default numerical tolerances, collected in one place.

Scale-aware use is up to the consumer: residual-type checks multiply by
(1 + |lambda|), sign dead-bands by the max of the field they filter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-12        # | ||u|| - 1 |
    res: float = 1e-8          # eigen-residual, times (1 + |lambda|)
    bisect: float = 1e-12      # bisection width, times (1 + |lambda|)
    match: float = 1e-5        # flux vs integral first derivative, times (1 + |ld|)
    orth: float = 1e-10        # |integral of u * u_dot|
    sign: float = 1e-9         # sign-change dead band, times max |field|
    trunc: float = 1e-9        # truncation doubling check on lambda
    margin: float = 25.0       # V(wall) - lambda at the truncation wall
    thm_factor: float = 10.0   # tol_thm = thm_factor * h^2 * max|lambda|
    pos: float = 1e-9          # positivity dead band, times max u
    h_t_factor: float = 1e-3   # FD step: h_t = h_t_factor * (t - a_eff)

    def override(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLS = Tolerances()
