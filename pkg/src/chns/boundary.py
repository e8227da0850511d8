"""Time-dependent tangential wall data and its fractional trace norms.

Wall data is separable, h(x, t) = a(t) g(x) per wall, with a single
amplitude shared by both walls.  Separability keeps the time derivative and
every tail integral closed-form, which is what the decay certification and
the Gronwall bookkeeping consume.  The normal component is identically zero
by construction (tangential data only).

Trace norms are Fourier-multiplier norms on each periodic wall,
``|h|_s^2 = lx * sum_m (1 + k_m^2)^s |c_m|^2`` with k_m = 2 pi m / lx, and
the two walls combine in quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, MisalignedSeries, UnsupportedFamily
from .grid import Grid, VectorField

FAMILIES = ("couette_ramp", "decaying_oscillation", "custom_static", "power_decay", "custom")


@dataclass(frozen=True)
class Amplitude:
    """Closed-form amplitude a(t) with derivative and tail integrals.

    families:
      couette_ramp          a(t) = a_inf + (a0 - a_inf) exp(-rate t)
      decaying_oscillation  a(t) = a0 exp(-rate t) cos(omega t)
      custom_static         a(t) = a0
      power_decay           a(t) = a0 (1 + t)^(-p)
      custom                arbitrary callables (no closed-form tails)
    """

    family: str
    a0: float = 0.0
    a_inf: float = 0.0
    rate: float = 1.0
    omega: float = 0.0
    p: float = 1.0
    fn: object = None
    fn_dt: object = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvariantViolation(f"unknown amplitude family {self.family!r}")
        if self.family in ("couette_ramp", "decaying_oscillation") and self.rate <= 0:
            raise InvariantViolation("decay rate must be positive")
        if self.family == "power_decay" and self.p <= 0.5:
            raise InvariantViolation("power_decay needs p > 1/2 for square-integrable tails")
        if self.family == "custom" and (self.fn is None or self.fn_dt is None):
            raise InvariantViolation("custom amplitude needs fn and fn_dt callables")

    def __call__(self, t: float) -> float:
        if self.family == "couette_ramp":
            return self.a_inf + (self.a0 - self.a_inf) * math.exp(-self.rate * t)
        if self.family == "decaying_oscillation":
            return self.a0 * math.exp(-self.rate * t) * math.cos(self.omega * t)
        if self.family == "custom_static":
            return self.a0
        if self.family == "power_decay":
            return self.a0 * (1.0 + t) ** (-self.p)
        return float(self.fn(t))

    def dt(self, t: float) -> float:
        if self.family == "couette_ramp":
            return -self.rate * (self.a0 - self.a_inf) * math.exp(-self.rate * t)
        if self.family == "decaying_oscillation":
            e = math.exp(-self.rate * t)
            return -self.a0 * e * (self.rate * math.cos(self.omega * t)
                                   + self.omega * math.sin(self.omega * t))
        if self.family == "custom_static":
            return 0.0
        if self.family == "power_decay":
            return -self.p * self.a0 * (1.0 + t) ** (-self.p - 1.0)
        return float(self.fn_dt(t))

    def limit(self) -> float:
        """a(t) as t -> infinity (the stationary amplitude)."""
        if self.family == "couette_ramp":
            return self.a_inf
        if self.family == "custom_static":
            return self.a0
        if self.family in ("decaying_oscillation", "power_decay"):
            return 0.0
        raise UnsupportedFamily("custom amplitude has no declared limit")

    # -- closed-form integrals ----------------------------------------------

    def _exp_cos_tail(self, t: float, decay: float, c0: float, c1: float,
                      c2: float, w: float) -> float:
        """integral_t^inf e^(-decay s) (c0 + c1 cos(w s) + c2 sin(w s)) ds."""
        out = c0 * math.exp(-decay * t) / decay
        if c1 or c2:
            z = cmath.exp((-decay + 1j * w) * t) / (decay - 1j * w)
            out += c1 * z.real + c2 * z.imag
        return out

    def sq_tail(self, t: float) -> float:
        """integral_t^inf a(s)^2 ds; inf when the tail diverges."""
        if self.family == "couette_ramp":
            c = self.a0 - self.a_inf
            if self.a_inf != 0.0:
                return math.inf if (self.a_inf or c) else 0.0
            return c * c * math.exp(-2.0 * self.rate * t) / (2.0 * self.rate)
        if self.family == "decaying_oscillation":
            # a^2 = a0^2 e^(-2 r s) (1 + cos(2 w s)) / 2
            a2 = self.a0 * self.a0
            return self._exp_cos_tail(t, 2 * self.rate, 0.5 * a2, 0.5 * a2, 0.0,
                                      2 * self.omega)
        if self.family == "custom_static":
            return 0.0 if self.a0 == 0.0 else math.inf
        if self.family == "power_decay":
            if self.p <= 0.5:
                return math.inf
            return self.a0**2 * (1.0 + t) ** (1.0 - 2 * self.p) / (2 * self.p - 1.0)
        raise UnsupportedFamily("no closed-form tail for custom amplitude")

    def dt_sq_tail(self, t: float) -> float:
        """integral_t^inf a'(s)^2 ds."""
        if self.family == "couette_ramp":
            c = self.rate * (self.a0 - self.a_inf)
            return c * c * math.exp(-2.0 * self.rate * t) / (2.0 * self.rate)
        if self.family == "decaying_oscillation":
            # (r cos + w sin)^2 = (r^2+w^2)/2 + (r^2-w^2)/2 cos(2w s) + r w sin(2w s)
            r, w, a2 = self.rate, self.omega, self.a0 * self.a0
            return a2 * self._exp_cos_tail(t, 2 * r, 0.5 * (r * r + w * w),
                                           0.5 * (r * r - w * w), r * w, 2 * w)
        if self.family == "custom_static":
            return 0.0
        if self.family == "power_decay":
            c = self.p * self.a0
            return c * c * (1.0 + t) ** (-1.0 - 2 * self.p) / (2 * self.p + 1.0)
        raise UnsupportedFamily("no closed-form tail for custom amplitude")

    def sq_integral(self, t: float) -> float:
        """integral_0^t a(s)^2 ds (always finite)."""
        if self.family == "couette_ramp":
            c, r, ai = self.a0 - self.a_inf, self.rate, self.a_inf
            return (ai * ai * t + 2 * ai * c * (1 - math.exp(-r * t)) / r
                    + c * c * (1 - math.exp(-2 * r * t)) / (2 * r))
        if self.family == "custom_static":
            return self.a0 * self.a0 * t
        return self.sq_tail(0.0) - self.sq_tail(t)

    def dt_sq_integral(self, t: float) -> float:
        """integral_0^t a'(s)^2 ds."""
        return self.dt_sq_tail(0.0) - self.dt_sq_tail(t)


def wall_profile(grid: Grid, kind: str, scale: float = 1.0) -> np.ndarray:
    """Named tangential profiles sampled at the x-velocity face positions."""
    x = grid.xf
    if kind == "zero":
        return np.zeros(grid.nx)
    if kind == "uniform":
        return scale * np.ones(grid.nx)
    if kind.startswith("single_mode"):
        m = int(kind.split(":")[1]) if ":" in kind else 1
        return scale * np.cos(2 * np.pi * m * x / grid.lx)
    raise InvariantViolation(f"unknown wall profile {kind!r}")


@dataclass(frozen=True)
class WallData:
    """Tangential boundary velocity a(t) * (g_bottom, g_top); normal part is zero."""

    grid: Grid
    g_bottom: np.ndarray
    g_top: np.ndarray
    amplitude: Amplitude

    def __post_init__(self):
        gb = np.asarray(self.g_bottom, dtype=float)
        gt = np.asarray(self.g_top, dtype=float)
        if gb.shape != (self.grid.nx,) or gt.shape != (self.grid.nx,):
            raise InvariantViolation("wall arrays must have length nx")
        if not (np.isfinite(gb).all() and np.isfinite(gt).all()):
            raise InvariantViolation("wall arrays must be finite")
        object.__setattr__(self, "g_bottom", gb)
        object.__setattr__(self, "g_top", gt)

    @classmethod
    def zero(cls, grid: Grid) -> "WallData":
        z = np.zeros(grid.nx)
        return cls(grid, z, z.copy(), Amplitude("custom_static", a0=0.0))

    def eval_wall(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if t < 0:
            raise InvariantViolation(f"negative time {t}")
        a = self.amplitude(t)
        return a * self.g_bottom, a * self.g_top

    def eval_wall_dt(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if t < 0:
            raise InvariantViolation(f"negative time {t}")
        a = self.amplitude.dt(t)
        return a * self.g_bottom, a * self.g_top

    def is_zero(self) -> bool:
        return bool(np.all(self.g_bottom == 0.0) and np.all(self.g_top == 0.0)) \
            or (self.amplitude.family == "custom_static" and self.amplitude.a0 == 0.0)

    def shape_trace_norm_sq(self, s: float) -> float:
        """Both-wall squared trace norm of the unit shape (g_bottom, g_top)."""
        return trace_norm(self.g_bottom, s, self.grid.lx) ** 2 \
            + trace_norm(self.g_top, s, self.grid.lx) ** 2

    def trace_norm_at(self, t: float, s: float) -> float:
        return abs(self.amplitude(t)) * math.sqrt(self.shape_trace_norm_sq(s))

    def trace_norm_dt_at(self, t: float, s: float) -> float:
        return abs(self.amplitude.dt(t)) * math.sqrt(self.shape_trace_norm_sq(s))

    def limit_wall(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.amplitude.limit()
        return a * self.g_bottom, a * self.g_top


def trace_norm(data: np.ndarray, s: float, lx: float = 1.0) -> float:
    """Fractional Sobolev norm of 1D periodic wall data via Fourier multipliers.

    At s = 0 this is the periodic L2 norm; it is monotone increasing in s for
    fixed data.
    """
    if not -2.0 <= s <= 3.0:
        raise InvariantViolation(f"trace norm order {s} outside [-2, 3]")
    data = np.asarray(data, dtype=float)
    n = data.size
    coeffs = np.fft.rfft(data) / n
    weights = np.full(coeffs.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    kappa = 2.0 * np.pi * np.arange(coeffs.size) / lx
    total = np.sum(weights * (1.0 + kappa**2) ** s * np.abs(coeffs) ** 2)
    return float(np.sqrt(lx * total))


def extrapolated_wall_trace(u: VectorField) -> tuple[np.ndarray, np.ndarray]:
    """Second-order extrapolation of the tangential component to the walls."""
    bottom = 1.5 * u.ux[:, 0] - 0.5 * u.ux[:, 1]
    top = 1.5 * u.ux[:, -1] - 0.5 * u.ux[:, -2]
    return bottom, top


def check_compatibility(u0: VectorField, data: WallData, tol: float = 1e-8) -> bool:
    """Does the initial velocity trace match the wall data at t = 0?"""
    bottom, top = extrapolated_wall_trace(u0)
    hb, ht = data.eval_wall(0.0)
    err = max(np.abs(bottom - hb).max(), np.abs(top - ht).max())
    return bool(err <= tol)


# ---------------------------------------------------------------------------
# decay certification
# ---------------------------------------------------------------------------

def _tail_exponent(amplitude: Amplitude, derivative: bool) -> float | None:
    """Polynomial decay exponent of the tail integral; None means exponential."""
    fam = amplitude.family
    if fam in ("couette_ramp", "decaying_oscillation"):
        return None
    if fam == "custom_static":
        return None
    if fam == "power_decay":
        return 1.0 + 2 * amplitude.p if derivative else 2 * amplitude.p - 1.0
    raise UnsupportedFamily("decay certification needs closed-form tails")


def certify_decay(data: WallData, gamma: float, t_grid=None) -> dict:
    """Check the three tail-integral decay conditions at rate (1+t)^(-1-gamma).

    Conditions, each with its own trace-norm weight:
      1. tail of |da/dt|^2 * |g|_{-1/2}^2
      2. tail of |da/dt|^2 * |g|_{+1/2}^2
      3. tail of |a|^2    * |g|_{+3/2}^2
    The report carries pass/fail per condition plus the smallest admissible
    front constant over the probe grid.
    """
    if gamma <= 0:
        raise InvariantViolation("gamma must be positive")
    amp = data.amplitude
    if amp.family == "custom":
        raise UnsupportedFamily("decay certification needs closed-form tails")
    if t_grid is None:
        t_grid = np.linspace(0.0, 50.0, 201)
    t_grid = np.asarray(t_grid, dtype=float)

    conditions = []
    for name, weight, derivative in (
        ("dt_minus_half", data.shape_trace_norm_sq(-0.5), True),
        ("dt_plus_half", data.shape_trace_norm_sq(0.5), True),
        ("h_three_half", data.shape_trace_norm_sq(1.5), False),
    ):
        tail = amp.dt_sq_tail if derivative else amp.sq_tail
        tail0 = tail(0.0)
        if weight == 0.0 or tail0 == 0.0:
            conditions.append({"name": name, "pass": True, "constant": 0.0})
            continue
        if not math.isfinite(tail0):
            conditions.append({"name": name, "pass": False, "constant": math.inf})
            continue
        expo = _tail_exponent(amp, derivative)
        if expo is not None and expo < 1.0 + gamma:
            # polynomial tail too slow: sup over t of the ratio diverges
            conditions.append({"name": name, "pass": False, "constant": math.inf})
            continue
        ratios = [weight * tail(t) * (1.0 + t) ** (1.0 + gamma) for t in t_grid]
        conditions.append({"name": name, "pass": True, "constant": float(max(ratios))})

    return {
        "gamma": gamma,
        "family": amp.family,
        "pass": all(c["pass"] for c in conditions),
        "conditions": {c["name"]: c for c in conditions},
    }


def require_aligned(t1, t2, what="series"):
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if t1.shape != t2.shape or not np.allclose(t1, t2, rtol=0, atol=1e-12):
        raise MisalignedSeries(f"{what}: time grids differ")
    return t1
