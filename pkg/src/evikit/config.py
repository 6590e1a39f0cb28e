"""Numerical tolerance configuration.

All tolerances are scale-relative: a residual r at scale s passes when
r <= tol * (1 + s).  The environment variable EVIKIT_TOL_SCALE multiplies
every default tolerance, so a whole run can be loosened or tightened
without touching call sites.
"""

import os
from dataclasses import dataclass, replace


def _env_scale():
    try:
        return float(os.environ.get("EVIKIT_TOL_SCALE", "1.0"))
    except ValueError:
        return 1.0


@dataclass(frozen=True)
class ToleranceConfig:
    feas: float = 1e-9
    gap: float = 1e-8
    proj: float = 1e-7
    fixed_point: float = 1e-7
    pivot: float = 1e-10
    max_pivots: int = 50_000

    @classmethod
    def default(cls):
        s = _env_scale()
        if s == 1.0:
            return cls()
        return cls(feas=1e-9 * s, gap=1e-8 * s, proj=1e-7 * s,
                   fixed_point=1e-7 * s, pivot=1e-10 * s)

    def tightened(self, factor=0.01):
        """Config with all residual tolerances shrunk by `factor` (floored at 1e-13)."""
        return replace(
            self,
            feas=max(self.feas * factor, 1e-13),
            gap=max(self.gap * factor, 1e-13),
            pivot=max(self.pivot * factor, 1e-14),
        )

    def feas_ok(self, residual, scale=0.0):
        return residual <= self.feas * (1.0 + abs(scale))

    def gap_ok(self, residual, scale=0.0):
        return residual <= self.gap * (1.0 + abs(scale))

    def proj_ok(self, residual, scale=0.0):
        return residual <= self.proj * (1.0 + abs(scale))


DEFAULT = ToleranceConfig.default()
