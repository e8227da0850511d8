"""Discrete differential operators, transform solvers, and norms.

Sign and staggering conventions:

* ``divergence`` maps faces -> centers and ``gradient`` maps centers -> faces;
  they are exact negative adjoints under the midpoint inner products below,
  so ``leray_project`` is an exact orthogonal projection.
* Both advection operators are written in conservative flux form with
  centered face interpolation.  Against the transported argument they are
  skew-symmetric to round-off whenever the advecting field is discretely
  divergence-free, and the scalar form conserves the cell sum exactly for
  any advecting field with zero wall-normal component.
* Wall closures: scalars reflect (homogeneous Neumann); tangential velocity
  uses linear ghost extrapolation ``ghost = 2 g - interior`` for Dirichlet
  data g, which reduces to an odd reflection when g = 0.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .errors import IncompatibleRHS, InvariantViolation, NonpositiveViscosity
from .grid import Grid, ScalarField, VectorField, require_same_grid

__all__ = [
    "divergence", "gradient", "laplacian_neumann", "helmholtz_solve_neumann",
    "leray_project", "advect_scalar", "advect_velocity", "viscous_term",
    "inner", "inner_vec", "l2", "h1", "hminus1", "grad_norm_sq",
    "vector_laplacian", "v1_norm", "v2_norm", "h2_norm_sq",
    "spectral_truncate", "interp_center_to_xface", "interp_center_to_yface",
]

MEAN_TOL = 1e-10


# ---------------------------------------------------------------------------
# first-order operators
# ---------------------------------------------------------------------------

def divergence(v: VectorField) -> ScalarField:
    """Centered MAC divergence at cell centers."""
    g = v.grid
    if np.any(v.uy[:, 0] != 0.0) or np.any(v.uy[:, -1] != 0.0):
        raise InvariantViolation("divergence: nonzero wall-normal velocity")
    ddx = (np.roll(v.ux, -1, axis=0) - v.ux) / g.dx
    ddy = (v.uy[:, 1:] - v.uy[:, :-1]) / g.dy
    return ScalarField(ddx + ddy, g)


def gradient(s: ScalarField) -> VectorField:
    """Face-located centered gradient; wall-normal rows are zero (no-flux closure)."""
    g = s.grid
    gx = (s.values - np.roll(s.values, 1, axis=0)) / g.dx
    gy = np.zeros((g.nx, g.ny + 1))
    gy[:, 1:-1] = (s.values[:, 1:] - s.values[:, :-1]) / g.dy
    return VectorField(gx, gy, g)


def laplacian_neumann(s: ScalarField) -> ScalarField:
    """5-point Laplacian, periodic in x, reflecting ghosts at the walls.

    Identical to divergence(gradient(s)), so it annihilates constants and
    preserves the mean exactly.
    """
    g = s.grid
    a = s.values
    out = (np.roll(a, -1, axis=0) - 2.0 * a + np.roll(a, 1, axis=0)) / g.dx**2
    ydiff = np.zeros_like(a)
    ydiff[:, :-1] += (a[:, 1:] - a[:, :-1])
    ydiff[:, 1:] += (a[:, :-1] - a[:, 1:])
    return ScalarField(out + ydiff / g.dy**2, g)


# ---------------------------------------------------------------------------
# transform solvers
# ---------------------------------------------------------------------------

def helmholtz_solve_neumann(rhs: ScalarField, a: float, b: float) -> ScalarField:
    """Solve (a*I - b*Lap) s = rhs with the periodic/Neumann closure, exactly.

    For a = 0 the operator has the constants in its kernel: the right-hand
    side must have (numerically) zero mean and the returned field is the
    zero-mean solution.
    """
    if b <= 0:
        raise InvariantViolation("helmholtz_solve_neumann: need b > 0")
    if a < 0:
        raise InvariantViolation("helmholtz_solve_neumann: need a >= 0")
    g = rhs.grid
    coeffs = g.to_spectral(rhs.values)
    denom = a - b * g.lam_neumann
    if a == 0:
        scale = l2(rhs)
        if abs(rhs.mean()) > MEAN_TOL * max(scale, 1.0):
            raise IncompatibleRHS(
                f"pure-Neumann solve needs zero-mean rhs; |mean| = {abs(rhs.mean()):.3e}")
        denom = denom.copy()
        denom[0, 0] = 1.0
        coeffs[0, 0] = 0.0
    return ScalarField(g.from_spectral(coeffs / denom), g)


def leray_project(v: VectorField) -> tuple[VectorField, ScalarField]:
    """Orthogonal projection onto discretely divergence-free fields.

    Returns (Pv, q) with Pv = v - gradient(q), divergence(Pv) = 0 to
    round-off, and q zero-mean.
    """
    g = v.grid
    div = divergence(v)
    coeffs = g.to_spectral(div.values)
    lam = g.lam_neumann.copy()
    lam[0, 0] = 1.0
    coeffs /= lam
    coeffs[0, 0] = 0.0          # mean(div) vanishes identically by telescoping
    q = ScalarField(g.from_spectral(coeffs), g)
    return v - gradient(q), q


# ---------------------------------------------------------------------------
# advection
# ---------------------------------------------------------------------------

def interp_center_to_xface(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.roll(a, 1, axis=0))


def interp_center_to_yface(a: np.ndarray) -> np.ndarray:
    """Interior horizontal faces only; callers supply wall values."""
    return 0.5 * (a[:, 1:] + a[:, :-1])


def advect_scalar(v: VectorField, s: ScalarField) -> ScalarField:
    """Conservative transport term div(v s) with centered face values."""
    require_same_grid(v, s)
    g = v.grid
    flux_x = v.ux * interp_center_to_xface(s.values)
    flux_y = np.zeros((g.nx, g.ny + 1))
    flux_y[:, 1:-1] = v.uy[:, 1:-1] * interp_center_to_yface(s.values)
    return divergence(VectorField(flux_x, flux_y, g))


def advect_velocity(v: VectorField, w: VectorField) -> VectorField:
    """Conservative MAC transport of w by v, component by component.

    Each component is advected on its dual cell with the advecting normal
    velocity interpolated there; the dual divergence is the average of the
    primal one, so skew-symmetry holds exactly for discretely
    divergence-free v.
    """
    require_same_grid(v, w)
    g = v.grid
    dx, dy = g.dx, g.dy

    # x-component: dual cells centered on vertical faces.
    uc = 0.5 * (v.ux + np.roll(v.ux, -1, axis=0))            # at cell centers
    fe = uc * 0.5 * (w.ux + np.roll(w.ux, -1, axis=0))       # east/west dual fluxes
    vcorn = 0.5 * (v.uy + np.roll(v.uy, 1, axis=0))          # at corners, rows 0..ny
    fn = np.zeros((g.nx, g.ny + 1))
    fn[:, 1:-1] = vcorn[:, 1:-1] * 0.5 * (w.ux[:, 1:] + w.ux[:, :-1])
    adv_x = (fe - np.roll(fe, 1, axis=0)) / dx + (fn[:, 1:] - fn[:, :-1]) / dy

    # y-component: dual cells centered on interior horizontal faces.
    ucorn = np.zeros((g.nx, g.ny + 1))
    ucorn[:, 1:-1] = 0.5 * (v.ux[:, 1:] + v.ux[:, :-1])      # at corners
    fxc = np.zeros((g.nx, g.ny + 1))
    fxc[:, 1:-1] = ucorn[:, 1:-1] * 0.5 * (w.uy[:, 1:-1] + np.roll(w.uy[:, 1:-1], 1, axis=0))
    vc = 0.5 * (v.uy[:, 1:] + v.uy[:, :-1])                  # at cell centers
    fyc = vc * 0.5 * (w.uy[:, 1:] + w.uy[:, :-1])
    adv_y = np.zeros((g.nx, g.ny + 1))
    adv_y[:, 1:-1] = (np.roll(fxc[:, 1:-1], -1, axis=0) - fxc[:, 1:-1]) / dx \
        + (fyc[:, 1:] - fyc[:, :-1]) / dy
    return VectorField(adv_x, adv_y, g)


# ---------------------------------------------------------------------------
# viscous stress
# ---------------------------------------------------------------------------

def _nu_at_corners(nu: np.ndarray) -> np.ndarray:
    """Viscosity averaged to corner points, rows 0..ny (reflecting wall ghosts)."""
    nx, ny = nu.shape
    out = np.zeros((nx, ny + 1))
    avg_x = 0.5 * (nu + np.roll(nu, 1, axis=0))
    out[:, 1:-1] = 0.5 * (avg_x[:, 1:] + avg_x[:, :-1])
    out[:, 0] = avg_x[:, 0]
    out[:, -1] = avg_x[:, -1]
    return out


def viscous_term(nu_field: ScalarField, v: VectorField,
                 wall_bottom: np.ndarray | None = None,
                 wall_top: np.ndarray | None = None) -> VectorField:
    """Divergence of the viscous stress nu * sym(grad v).

    For constant nu and divergence-free v this is nu/2 times the vector
    Laplacian.  Tangential wall data enters through linear ghosts; with the
    default homogeneous data the operator is symmetric negative
    semi-definite against v.
    """
    require_same_grid(nu_field, v)
    g = v.grid
    nu = nu_field.values
    if np.any(nu <= 0.0):
        raise NonpositiveViscosity(f"viscosity min = {nu.min():.3e}")
    gb = np.zeros(g.nx) if wall_bottom is None else np.asarray(wall_bottom, dtype=float)
    gt = np.zeros(g.nx) if wall_top is None else np.asarray(wall_top, dtype=float)

    dx, dy = g.dx, g.dy
    # Normal stresses at cell centers.
    txx = nu * (np.roll(v.ux, -1, axis=0) - v.ux) / dx
    tyy = nu * (v.uy[:, 1:] - v.uy[:, :-1]) / dy

    # Shear stress at corners (rows 0..ny); ghost rows encode the wall data.
    dyux = np.zeros((g.nx, g.ny + 1))
    dyux[:, 1:-1] = (v.ux[:, 1:] - v.ux[:, :-1]) / dy
    dyux[:, 0] = 2.0 * (v.ux[:, 0] - gb) / dy
    dyux[:, -1] = 2.0 * (gt - v.ux[:, -1]) / dy
    dxuy = (v.uy - np.roll(v.uy, 1, axis=0)) / dx
    txy = _nu_at_corners(nu) * 0.5 * (dyux + dxuy)

    out_x = (txx - np.roll(txx, 1, axis=0)) / dx + (txy[:, 1:] - txy[:, :-1]) / dy
    out_y = np.zeros((g.nx, g.ny + 1))
    out_y[:, 1:-1] = (np.roll(txy[:, 1:-1], -1, axis=0) - txy[:, 1:-1]) / dx \
        + (tyy[:, 1:] - tyy[:, :-1]) / dy
    return VectorField(out_x, out_y, g)


def vector_laplacian(v: VectorField,
                     wall_bottom: np.ndarray | None = None,
                     wall_top: np.ndarray | None = None) -> VectorField:
    """Component-wise 5-point Laplacian with tangential Dirichlet ghosts."""
    g = v.grid
    gb = np.zeros(g.nx) if wall_bottom is None else np.asarray(wall_bottom, dtype=float)
    gt = np.zeros(g.nx) if wall_top is None else np.asarray(wall_top, dtype=float)
    dx2, dy2 = g.dx**2, g.dy**2

    a = v.ux
    lap_x = (np.roll(a, -1, axis=0) - 2 * a + np.roll(a, 1, axis=0)) / dx2
    ydiff = np.empty_like(a)
    ydiff[:, 1:-1] = a[:, 2:] - 2 * a[:, 1:-1] + a[:, :-2]
    ydiff[:, 0] = a[:, 1] - 3 * a[:, 0] + 2 * gb
    ydiff[:, -1] = 2 * gt - 3 * a[:, -1] + a[:, -2]
    lap_x += ydiff / dy2

    b = v.uy
    lap_y = np.zeros_like(b)
    lap_y[:, 1:-1] = (np.roll(b[:, 1:-1], -1, axis=0) - 2 * b[:, 1:-1]
                      + np.roll(b[:, 1:-1], 1, axis=0)) / dx2 \
        + (b[:, 2:] - 2 * b[:, 1:-1] + b[:, :-2]) / dy2
    return VectorField(lap_x, lap_y, g)


# ---------------------------------------------------------------------------
# inner products and norms (midpoint quadrature throughout)
# ---------------------------------------------------------------------------

def inner(a: ScalarField, b: ScalarField) -> float:
    require_same_grid(a, b)
    return float(a.grid.cell_area * np.vdot(a.values, b.values))


def inner_vec(a: VectorField, b: VectorField) -> float:
    require_same_grid(a, b)
    w = a.grid.cell_area
    return float(w * (np.vdot(a.ux, b.ux) + np.vdot(a.uy[:, 1:-1], b.uy[:, 1:-1])))


def l2(f) -> float:
    if isinstance(f, ScalarField):
        return float(np.sqrt(inner(f, f)))
    return float(np.sqrt(inner_vec(f, f)))


def h1(s: ScalarField) -> float:
    return float(np.sqrt(l2(s)**2 + l2(gradient(s))**2))


def hminus1(s: ScalarField) -> float:
    """Dual norm against the H1 pairing: sqrt(<s, (I - Lap)^{-1} s>)."""
    w = helmholtz_solve_neumann(s, 1.0, 1.0)
    val = inner(s, w)
    return float(np.sqrt(max(val, 0.0)))


def grad_norm_sq(v: VectorField,
                 wall_bottom: np.ndarray | None = None,
                 wall_top: np.ndarray | None = None) -> float:
    """Squared discrete gradient norm of a staggered vector field.

    Corner rows carry trapezoid weight 1/2 so that for homogeneous data the
    value equals -<vector_laplacian(v), v> exactly (the dissipation form).
    """
    g = v.grid
    gb = np.zeros(g.nx) if wall_bottom is None else np.asarray(wall_bottom, dtype=float)
    gt = np.zeros(g.nx) if wall_top is None else np.asarray(wall_top, dtype=float)
    w = g.cell_area
    dxux = (np.roll(v.ux, -1, axis=0) - v.ux) / g.dx
    dyuy = (v.uy[:, 1:] - v.uy[:, :-1]) / g.dy
    total = np.sum(dxux**2) + np.sum(dyuy**2)

    dyux_int = (v.ux[:, 1:] - v.ux[:, :-1]) / g.dy
    dyux_b = 2.0 * (v.ux[:, 0] - gb) / g.dy
    dyux_t = 2.0 * (gt - v.ux[:, -1]) / g.dy
    total += np.sum(dyux_int**2) + 0.5 * np.sum(dyux_b**2) + 0.5 * np.sum(dyux_t**2)

    dxuy = (v.uy - np.roll(v.uy, 1, axis=0)) / g.dx
    total += np.sum(dxuy[:, 1:-1]**2)        # wall rows vanish identically
    return float(w * total)


def v1_norm(v: VectorField, **wall_kw) -> float:
    return float(np.sqrt(l2(v)**2 + grad_norm_sq(v, **wall_kw)))


def v2_norm(v: VectorField,
            wall_bottom: np.ndarray | None = None,
            wall_top: np.ndarray | None = None) -> float:
    lap = vector_laplacian(v, wall_bottom, wall_top)
    return float(np.sqrt(l2(v)**2 + grad_norm_sq(v, wall_bottom, wall_top) + l2(lap)**2))


def h2_norm_sq(s: ScalarField) -> float:
    return l2(s)**2 + l2(gradient(s))**2 + l2(laplacian_neumann(s))**2


# ---------------------------------------------------------------------------
# spectral truncation
# ---------------------------------------------------------------------------

def spectral_truncate(s: ScalarField, n_x: int, n_y: int) -> ScalarField:
    """Zero every transform coefficient above the cutoffs.

    Keeps periodic x-modes k <= n_x and cosine y-modes m < n_y; the full
    cutoffs (nx/2, ny) give the identity.  Orthogonality of both bases makes
    the truncation idempotent and norm non-increasing.
    """
    g = s.grid
    if not (0 <= n_x <= g.nx // 2):
        raise InvariantViolation(f"x cutoff {n_x} outside [0, {g.nx // 2}]")
    if not (1 <= n_y <= g.ny):
        raise InvariantViolation(f"y cutoff {n_y} outside [1, {g.ny}]")
    coeffs = g.to_spectral(s.values)
    coeffs[n_x + 1:, :] = 0.0
    coeffs[:, n_y:] = 0.0
    return ScalarField(g.from_spectral(coeffs), g)
