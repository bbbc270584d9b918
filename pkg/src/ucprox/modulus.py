"""The ``Modulus`` value type shared by every module.

A modulus is a positive function of a separation ``eps``.  Only the witnessed
property is assumed monotone, not the formula, but every formula shipped in
this package happens to be nondecreasing, which is what makes bisection-based
inversion sound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import InputError

INVERSE_RTOL = 1e-10


@dataclass(frozen=True)
class Modulus:
    evaluator: Callable[[float], float]
    provenance: str
    params: dict = field(default_factory=dict)
    valid_range: tuple = (0.0, math.inf)

    def __post_init__(self):
        if not self.provenance:
            raise InputError("modulus provenance must be nonempty")

    def __call__(self, eps: float) -> float:
        if not eps > 0:
            raise InputError(f"modulus argument must be positive, got {eps!r}")
        return float(self.evaluator(eps))

    def inverse(self, target: float, cap: float | None = None) -> float:
        """Upper bound on ``sup{eps <= cap : delta(eps) <= target}``.

        The returned value ``e`` satisfies ``delta(e) > target`` unless it equals
        ``cap``; any separation whose modulus value is at most ``target`` is
        therefore below ``e``.
        """
        hi_cap = self.valid_range[1] if cap is None else cap
        if not math.isfinite(hi_cap):
            raise InputError("inverse needs a finite cap")
        if target < 0:
            raise InputError("inverse target must be nonnegative")
        if target == 0:
            return 0.0
        if self(hi_cap) <= target:
            return float(hi_cap)
        lo, hi = 0.0, float(hi_cap)
        # geometric descent first: targets are often many orders below delta(cap)
        while hi > 1e-300 and self(hi / 2) > target:
            hi /= 2
        lo = hi / 2
        if lo > 0 and self(lo) > target:
            return hi
        while hi - lo > INVERSE_RTOL * hi:
            mid = 0.5 * (lo + hi)
            if self(mid) > target:
                hi = mid
            else:
                lo = mid
        return hi

    def tabulate(self, eps_grid) -> list:
        return [(float(e), self(e)) for e in eps_grid]

    def to_json(self, eps_grid=(0.1, 0.5, 1.0, 1.5, 2.0)) -> dict:
        return {
            "provenance": self.provenance,
            "parameters": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "valid_range": [_jsonable(v) for v in self.valid_range],
            "samples": [[e, d] for e, d in self.tabulate(eps_grid)],
        }


def pointwise_max(*moduli: Modulus) -> Modulus:
    """The pointwise maximum of valid moduli for one property is again valid."""
    lo = max(m.valid_range[0] for m in moduli)
    hi = min(m.valid_range[1] for m in moduli)
    return Modulus(
        lambda e: max(m(e) for m in moduli),
        "max(" + ", ".join(m.provenance for m in moduli) + ")",
        {},
        (lo, hi),
    )


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "tolist"):
        return v.tolist()
    return v
