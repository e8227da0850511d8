"""Energy bookkeeping, inequality certificates, and long-time monitors.

Every unknown constant from the analysis is replaced by its strongest
falsifiable surrogate: finite empirical ratios that must be stable under
time-step halving, or monotone tail behaviour of the tracked quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import WallData, require_aligned
from .errors import MisalignedSeries, ModeMismatch
from .grid import ScalarField, VectorField
from .lifting import EllipticLift
from .ops import (gradient, grad_norm_sq, h1, h2_norm_sq, hminus1, inner, l2,
                  laplacian_neumann, leray_project, v1_norm, v2_norm,
                  vector_laplacian)
from .potential import PotentialSpec, ViscositySpec, eval_F, eval_dF

CSV_COLUMNS = ("t", "kinetic", "interfacial", "bulk", "total", "diss_u",
               "diss_mu", "mass", "A", "B", "G", "res_phi", "res_u")


@dataclass(frozen=True)
class EnergyRecord:
    """Per-time diagnostics row.

    ``kinetic`` belongs to the homogenized field (ubar in lifted modes, the
    physical velocity otherwise); ``kinetic_total`` always refers to the
    physical velocity.  total = kinetic + interfacial + bulk by construction.
    """

    t: float
    kinetic: float
    interfacial: float
    bulk: float
    total: float
    diss_u: float
    diss_mu: float
    mass: float
    kinetic_total: float
    A: float = math.nan
    B: float = math.nan
    G: float = math.nan
    res_phi: float = math.nan
    res_u: float = math.nan

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class DiagnosticsContext:
    """Optional extras for records: residual targets and higher-order inputs."""

    data: WallData | None = None
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    viscosity: ViscositySpec | None = None
    u_infinity: VectorField | None = None
    mode: str = "direct"

    @classmethod
    def for_run(cls, grid, cfg, data, lift: EllipticLift | None = None):
        """Build the record context, reusing the run's lift for the limit field."""
        u_inf = None
        try:
            if lift is not None:
                u_inf = lift.limit_field()
            elif not data.is_zero():
                u_inf = EllipticLift(grid, cfg.viscosity.nu1, data).limit_field()
            else:
                u_inf = VectorField.zeros(grid)
        except Exception:
            u_inf = None
        return cls(data=data, potential=cfg.potential, viscosity=cfg.viscosity,
                   u_infinity=u_inf, mode=cfg.mode)


def energy(state, context: DiagnosticsContext | None = None) -> EnergyRecord:
    """Quadrature evaluation of the energy split plus the optional monitors."""
    phi, mu = state.phi, state.mu
    ub = state.velocity_for_energy()
    kinetic = 0.5 * l2(ub) ** 2
    kinetic_total = 0.5 * l2(state.u) ** 2
    interfacial = 0.5 * l2(gradient(phi)) ** 2
    bulk = float(np.sum(eval_F(phi.values)) * phi.grid.cell_area)
    diss_u = grad_norm_sq(ub)
    diss_mu = l2(gradient(mu)) ** 2

    a = b = gq = math.nan
    res_phi = res_u = math.nan
    if context is not None:
        res_phi = steady_state_residual_phi(phi, context.potential)
        if context.u_infinity is not None:
            res_u = v1_norm(state.u - context.u_infinity)
        if (context.mode == "lifted_parabolic" and state.lift is not None
                and state.lift.u_p is not None and context.viscosity is not None
                and context.viscosity.is_constant):
            a, b, gq = higher_order(state, context)
    return EnergyRecord(t=state.t, kinetic=kinetic, interfacial=interfacial,
                        bulk=bulk, total=kinetic + interfacial + bulk,
                        diss_u=diss_u, diss_mu=diss_mu, mass=phi.mean(),
                        kinetic_total=kinetic_total, A=a, B=b, G=gq,
                        res_phi=res_phi, res_u=res_u)


# ---------------------------------------------------------------------------
# energy inequality certificates
# ---------------------------------------------------------------------------

def energy_inequality_report(records, data: WallData, nu1: float = 1.0) -> dict:
    """Per-step decay check (homogeneous data) and the growth certificate.

    For h = 0 the interesting number is the largest per-step energy
    increment.  For general data the certificate is
    K(t) = E(t) / [(E(0) + D(t)) exp(W(t))] with D the accumulated data
    integrals and W the exponential weight; finiteness and stability of
    sup K under dt-halving stand in for the unknowable front constant.
    """
    if len(records) < 2:
        return {"max_step_increase": 0.0, "sup_K": 0.0,
                "dissipation_integral": 0.0, "homogeneous": data.is_zero()}
    t = np.array([r.t for r in records])
    e = np.array([r.total for r in records])
    dt_rec = np.diff(t)
    max_step_increase = float(np.max(np.diff(e) / dt_rec))

    amp = data.amplitude
    w_half = data.shape_trace_norm_sq(0.5)
    w_three = data.shape_trace_norm_sq(1.5)
    w_minus = data.shape_trace_norm_sq(-0.5)
    sup_k = 0.0
    for i in range(1, len(records)):
        ti = t[i]
        d = w_minus * amp.dt_sq_integral(ti) + w_three * amp.sq_integral(ti)
        wexp = math.exp(min(w_half * amp.sq_integral(ti), 700.0))
        denom = (e[0] + d) * wexp
        if denom > 0:
            sup_k = max(sup_k, e[i] / denom)

    diss = np.array([nu1 * r.diss_u + r.diss_mu for r in records])
    diss_integral = float(np.trapezoid(diss, t))
    return {
        "max_step_increase": max_step_increase,
        "sup_K": float(sup_k),
        "dissipation_integral": diss_integral,
        "dissipation_finite": bool(np.isfinite(diss_integral)),
        "homogeneous": data.is_zero(),
    }


# ---------------------------------------------------------------------------
# higher-order functionals
# ---------------------------------------------------------------------------

# Product terms of the auxiliary functional G.  Each factor is
# (norm key, exponent) with the exponent affine in the growth exponent q:
# exponent = q_coef * q + const.  The lone transcription fix: the shear term
# uses matching 8/5 powers on the lift and its gradient (the 5/8 variant in
# one listing is dimensionally inconsistent with its later use).
G_TERMS = (
    ("lift_v1_fourth", (("up_v1", 0.0, 4.0),)),
    ("lift_v1_v2", (("up_v1", 0.0, 2.0), ("up_v2", 0.0, 2.0))),
    ("mu_phi_gradients", (("grad_mu", 0.0, 2.0), ("grad_phi", 0.0, 1.0))),
    ("ubar_phi_low", (("ubar_l2", 0.0, 8.0 / 3.0), ("phi_l2", 0.0, 4.0 / 3.0))),
    ("lift_shear_phi", (("up_l2", 0.0, 8.0 / 5.0), ("grad_up", 0.0, 8.0 / 5.0),
                        ("phi_l2", 0.0, 4.0 / 5.0))),
    ("phi_sobolev_a", (("phi_h1", 4.0, -4.0), ("phi_h2", 4.0, -8.0))),
    ("phi_sobolev_b", (("phi_h1", 2.0, -2.0), ("phi_h2", 2.0, -2.0))),
    ("ubar_phi_high", (("ubar_l2", 0.0, 8.0 / 7.0), ("phi_h1", 8.0 / 7.0, -4.0 / 7.0),
                       ("phi_h2", 8.0 / 7.0, -8.0 / 7.0))),
    ("lift_phi_high", (("phi_h2", 8.0 / 7.0, -4.0 / 7.0), ("phi_h1", 8.0 / 7.0, -8.0 / 7.0),
                       ("up_l2", 0.0, 16.0 / 9.0))),
)


def _g_norms(state, context: DiagnosticsContext) -> dict:
    lift = state.lift
    hb, ht = context.data.eval_wall(state.t)
    u_p = lift.u_p
    phi = state.phi
    return {
        "up_v1": v1_norm(u_p, wall_bottom=hb, wall_top=ht),
        "up_v2": v2_norm(u_p, wall_bottom=hb, wall_top=ht),
        "up_l2": l2(u_p),
        "grad_up": math.sqrt(grad_norm_sq(u_p, wall_bottom=hb, wall_top=ht)),
        "ubar_l2": l2(state.ubar),
        "phi_l2": l2(phi),
        "phi_h1": h1(phi),
        "phi_h2": math.sqrt(h2_norm_sq(phi)),
        "grad_mu": l2(gradient(state.mu)),
        "grad_phi": l2(gradient(phi)),
    }


def evaluate_g(norms: dict, q: float) -> float:
    total = 0.0
    for _, factors in G_TERMS:
        term = 1.0
        for key, qc, const in factors:
            term *= norms[key] ** (qc * q + const)
        total += term
    return total


def higher_order(state, context: DiagnosticsContext) -> tuple[float, float, float]:
    """Higher-order functionals of the evolutionary-lift splitting.

    Restricted to constant-viscosity runs in the evolutionary-lift mode;
    anything else raises ModeMismatch.
    """
    if context.mode != "lifted_parabolic" or state.lift is None or state.lift.u_p is None:
        raise ModeMismatch("higher-order functionals need the evolutionary lift")
    if context.viscosity is None or not context.viscosity.is_constant:
        raise ModeMismatch("higher-order functionals are defined for constant viscosity")
    ubar = state.ubar
    phi, mu = state.phi, state.mu
    lap_phi = laplacian_neumann(phi)

    a = grad_norm_sq(ubar) + l2(lap_phi) ** 2 + l2(mu) ** 2

    stokes_u, _ = leray_project(-1.0 * vector_laplacian(ubar))
    lap2_phi = laplacian_neumann(lap_phi)
    lap_mu = laplacian_neumann(mu)
    b = context.viscosity.value * l2(stokes_u) ** 2 + l2(lap2_phi) ** 2 + l2(lap_mu) ** 2

    g = evaluate_g(_g_norms(state, context), context.potential.q)
    return float(a), float(b), float(g)


# ---------------------------------------------------------------------------
# steady states and continuous dependence
# ---------------------------------------------------------------------------

def steady_state_residual_phi(phi: ScalarField, potential: PotentialSpec) -> float:
    """Dual-norm residual of the stationary concentration problem.

    Depends on phi alone (adding a constant to the chemical potential does
    not change it); zero does not imply stability, merely criticality.
    """
    r = ScalarField(-laplacian_neumann(phi).values + eval_dF(phi.values), phi.grid)
    return hminus1(r)


def steady_state_residuals(state, h_inf_field: VectorField,
                           potential: PotentialSpec) -> tuple[float, float]:
    res_phi = steady_state_residual_phi(state.phi, potential)
    res_u = v1_norm(state.u - h_inf_field)
    return res_phi, res_u


@dataclass
class TrajectorySample:
    """Field snapshots at record times, for pairwise comparisons."""

    times: list = field(default_factory=list)
    u: list = field(default_factory=list)
    phi: list = field(default_factory=list)

    def append(self, state, record=None):
        self.times.append(state.t)
        self.u.append(state.u)
        self.phi.append(state.phi)


def continuous_dependence_metric(run1: TrajectorySample, run2: TrajectorySample,
                                 data1: WallData | None = None,
                                 data2: WallData | None = None) -> dict:
    """Strength of the trajectory difference against the data difference.

    LHS combines the sup-in-time and integrated norms of the differences;
    RHS aggregates the boundary-data norms plus the initial-data distance.
    With identical inputs both sides are exactly zero.
    """
    t = require_aligned(run1.times, run2.times, "trajectory samples")
    du_sup = 0.0
    dphi_sup = 0.0
    du_grad_sq = []
    dphi_h2_sq = []
    for u1, u2, p1, p2 in zip(run1.u, run2.u, run1.phi, run2.phi):
        du = u1 - u2
        dphi = p1 - p2
        du_sup = max(du_sup, l2(du))
        dphi_sup = max(dphi_sup, h1(dphi))
        du_grad_sq.append(grad_norm_sq(du))
        dphi_h2_sq.append(h2_norm_sq(dphi))
    lhs = du_sup + dphi_sup
    if len(t) > 1:
        lhs += math.sqrt(np.trapezoid(du_grad_sq, t)) + math.sqrt(np.trapezoid(dphi_h2_sq, t))

    rhs = l2(run1.u[0] - run2.u[0]) + h1(run1.phi[0] - run2.phi[0])
    if data1 is not None and data2 is not None:
        sup_h = 0.0
        h32_sq = []
        dth_sq = []
        for ti in t:
            b1, t1 = data1.eval_wall(ti)
            b2, t2 = data2.eval_wall(ti)
            db1, dt1 = data1.eval_wall_dt(ti)
            db2, dt2 = data2.eval_wall_dt(ti)
            from .boundary import trace_norm
            lx = run1.u[0].grid.lx
            sup_h = max(sup_h, math.hypot(trace_norm(b1 - b2, 0.5, lx),
                                          trace_norm(t1 - t2, 0.5, lx)))
            h32_sq.append(trace_norm(b1 - b2, 1.5, lx) ** 2
                          + trace_norm(t1 - t2, 1.5, lx) ** 2)
            dth_sq.append(trace_norm(db1 - db2, -0.5, lx) ** 2
                          + trace_norm(dt1 - dt2, -0.5, lx) ** 2)
        rhs += sup_h
        if len(t) > 1:
            rhs += math.sqrt(np.trapezoid(h32_sq, t)) + math.sqrt(np.trapezoid(dth_sq, t))
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0.0 else math.inf)
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio}


# ---------------------------------------------------------------------------
# tail behaviour
# ---------------------------------------------------------------------------

def zlem_tail_check(t, y, g=None) -> dict:
    """Integrability plus tail decay of a monitored scalar series.

    The tail flag compares the last-quarter maximum with the second-quarter
    maximum, which tolerates isolated spikes in between.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise MisalignedSeries("zlem_tail_check: t and y disagree")
    out = {"integral_y": float(np.trapezoid(y, t)),
           "integral_y_finite": bool(np.isfinite(np.trapezoid(y, t)))}
    if g is not None:
        g = np.asarray(g, dtype=float)
        if g.shape != t.shape:
            raise MisalignedSeries("zlem_tail_check: t and g disagree")
        out["integral_g"] = float(np.trapezoid(g, t))
        out["integral_g_finite"] = bool(np.isfinite(out["integral_g"]))
    span = t[-1] - t[0]
    q1 = t[0] + 0.25 * span
    q2 = t[0] + 0.5 * span
    q3 = t[0] + 0.75 * span
    early = y[(t >= q1) & (t <= q2)]
    late = y[t >= q3]
    early_max = float(early.max()) if early.size else float(y.max())
    late_max = float(late.max()) if late.size else float(y[-1])
    out["early_max"] = early_max
    out["late_max"] = late_max
    out["tail_ratio"] = late_max / early_max if early_max > 0 else 0.0
    out["decaying"] = bool(late_max < 0.5 * early_max + 1e-300)
    return out
