"""1D solver for the discounted MFG system on a truncated domain.

Backward HJB with discount lambda and vanishing viscosity nu_lambda:

    -du/dt - nu Lap u + lam u + lam^-1 H(lam Du, x) = F(x, m(t)),  u(T) = 0,

coupled to the forward Fokker-Planck transport of the density

    dm/dt - nu Lap m - div(m D_pH(lam Du, x)) = 0,   m(0) = m0.

The infinite-horizon system is approximated on [0, T] with terminal
condition u(T) = 0; diagnostics downstream exclude the terminal layer.

Scheme
------
* discount term integrated exactly per step (integrating factor
  exp(-lam dt)), so dt is constrained by the advective CFL only;
* Godunov upwinding on the quadratic part of H, simple upwinding on the
  drift part: a monotone scheme selecting the viscosity solution;
* diffusion implicit (tridiagonal solves), homogeneous Neumann walls;
* conservative upwind finite volumes for the density: mass conserved to
  solver precision, nonnegativity preserved under the CFL bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import BoundaryLeakError, CflError, GridError, StabilityError
from .hamiltonians import QuadraticDriftHamiltonian
from .kernels import CuckerSmaleKernel
from .measures import GridDensity, MeasurePath, wasserstein1_1d

BOUNDARY_MASS_TOL = 1e-7


@dataclass(frozen=True)
class PdeConfig:
    """Discretization and fixed-point parameters for one MFG solve."""

    lam: float
    T: float = 1.0
    half_width: float = 6.0
    n_x: int = 256
    dt: float = 1e-3
    nu: float | None = None  # None -> schedule nu = lam**-0.5
    mode: str = "damped-picard"
    theta: float = 0.5
    max_iterations: int = 200
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.T <= 0 or self.dt <= 0 or self.half_width <= 0 or self.n_x < 8:
            raise ValueError("invalid discretization parameters")
        if self.nu is not None and self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if self.mode not in ("damped-picard", "fictitious-play"):
            raise ValueError(f"unknown fixed-point mode {self.mode!r}")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must be in (0, 1]")

    @property
    def viscosity(self) -> float:
        return self.lam**-0.5 if self.nu is None else self.nu

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_x

    @property
    def n_steps(self) -> int:
        return max(1, round(self.T / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def cell_centers(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n_x) + 0.5) * self.dx


@dataclass(frozen=True)
class MfgSolution:
    """Solution pair of one fixed-point solve."""

    config: PdeConfig
    u_path: np.ndarray  # (n_steps+1, n_x)
    m_path: MeasurePath
    iterations: int
    residual: float
    converged: bool
    residual_history: tuple = field(default=(), repr=False)


def _neumann_laplacian(n: int, dx: float) -> sparse.csc_matrix:
    """FV Neumann Laplacian: symmetric, zero row sums (conservative)."""
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csc") / dx**2


class _DiffusionSolver:
    """Cached LU factorization of (I - dt * nu * Lap)."""

    def __init__(self, n: int, dx: float, dt: float, nu: float):
        self.active = nu > 0
        if self.active:
            lap = _neumann_laplacian(n, dx)
            self._lu = splu((sparse.identity(n, format="csc") - dt * nu * lap).tocsc())

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs) if self.active else rhs


def coupling_on_grid(kernel, m: GridDensity, x: np.ndarray) -> np.ndarray:
    """F(x_i, m) = (k*m)(x_i) by grid quadrature, vectorized in x."""
    diffs = x[:, None] - m.cell_centers[None, :]
    return m.dx * (kernel.value(diffs[..., None]) @ m.values)


def coupling_grad_on_grid(kernel, m: GridDensity, x: np.ndarray) -> np.ndarray:
    """D_x F(x_i, m) = (Dk*m)(x_i) with the Dk(0)=0 kink convention."""
    diffs = x[:, None] - m.cell_centers[None, :]
    return m.dx * (kernel.gradient(diffs[..., None])[..., 0] @ m.values)


def _godunov_quadratic(p_minus: np.ndarray, p_plus: np.ndarray) -> np.ndarray:
    """Godunov flux for p -> p^2/2 (convex, minimum at 0)."""
    return 0.5 * np.maximum(np.maximum(p_minus, 0.0) ** 2, np.minimum(p_plus, 0.0) ** 2)


def hjb_backward(
    cfg: PdeConfig,
    ham: QuadraticDriftHamiltonian,
    kernel,
    m_path: MeasurePath,
) -> np.ndarray:
    """Backward semi-implicit sweep; returns u on the full (time, space) grid."""
    if isinstance(kernel, CuckerSmaleKernel):
        raise TypeError("the 1D MFG solver takes a position-space kernel")
    if len(m_path) != cfg.n_steps + 1:
        raise ValueError("m_path must live on the solver's time grid")
    lam, dt, dx, nu = cfg.lam, cfg.dt, cfg.dx, cfg.viscosity
    x = cfg.cell_centers
    v = ham.drift(x)
    diffuse = _DiffusionSolver(cfg.n_x, dx, dt, nu)
    decay = np.exp(-lam * dt)
    source_gain = (1.0 - decay) / lam

    F_nodes = np.stack([coupling_on_grid(kernel, m, x) for m in m_path.measures])

    u = np.zeros((cfg.n_steps + 1, cfg.n_x))
    for j in range(cfg.n_steps - 1, -1, -1):
        un = u[j + 1]
        # one-sided gradients with Neumann ghosts (zero slope at the walls)
        p_minus = np.empty_like(un)
        p_plus = np.empty_like(un)
        p_minus[1:] = (un[1:] - un[:-1]) / dx
        p_minus[0] = 0.0
        p_plus[:-1] = (un[1:] - un[:-1]) / dx
        p_plus[-1] = 0.0
        # lam^-1 H(lam Du, x) = (lam/2)|Du|^2 - v(x).Du, upwinded
        a = -v  # advection speed of the drift part
        ham_term = lam * _godunov_quadratic(p_minus, p_plus)
        ham_term += np.maximum(a, 0.0) * p_minus + np.minimum(a, 0.0) * p_plus
        rhs = F_nodes[j + 1] - ham_term
        u_new = decay * un + source_gain * rhs
        u_new = diffuse(u_new)
        if not np.all(np.isfinite(u_new)):
            speed = np.max(np.abs(lam * np.maximum(np.abs(p_minus), np.abs(p_plus)) + np.abs(v)))
            raise StabilityError(
                f"HJB sweep produced non-finite values at step {j}; "
                f"advective CFL requires dt <= dx/max|lam Du - v| = {dx / max(speed, 1e-300):.3e}"
            )
        u[j] = u_new
    return u


def gradient_centered(u: np.ndarray, dx: float) -> np.ndarray:
    """Centered Du on cell centers, one-sided at the walls."""
    return np.gradient(u, dx, axis=-1)


def transport_step(
    m: np.ndarray,
    b_interface: np.ndarray,
    dt: float,
    dx: float,
    diffuse: _DiffusionSolver,
) -> np.ndarray:
    """One conservative upwind FV step with zero-flux walls.

    b_interface has n_x - 1 entries (interior interfaces).  Explicit
    upwind advection under CFL, then implicit diffusion; both stages
    conserve mass and keep the density nonnegative.
    """
    cfl = np.max(np.abs(b_interface)) * dt / dx if b_interface.size else 0.0
    if cfl > 1.0:
        raise CflError(f"advective CFL violated: max|b| dt/dx = {cfl:.3f} > 1")
    flux = np.maximum(b_interface, 0.0) * m[:-1] + np.minimum(b_interface, 0.0) * m[1:]
    out = m.copy()
    out[:-1] -= dt / dx * flux
    out[1:] += dt / dx * flux
    out = diffuse(out)
    # implicit diffusion is an M-matrix solve; clip pure roundoff noise
    np.clip(out, 0.0, None, out=out)
    return out


def fp_forward(
    cfg: PdeConfig,
    ham: QuadraticDriftHamiltonian,
    u_path: np.ndarray,
    m0: GridDensity,
) -> MeasurePath:
    """Forward transport of m0 along the drift -D_pH(lam Du, x)."""
    if m0.n != cfg.n_x:
        raise GridError(f"initial density has {m0.n} cells, config expects {cfg.n_x}")
    lam, dt, dx, nu = cfg.lam, cfg.dt, cfg.dx, cfg.viscosity
    x_int = cfg.cell_centers[:-1] + 0.5 * dx
    v_int = ham.drift(x_int)
    diffuse = _DiffusionSolver(cfg.n_x, dx, dt, nu)

    m = m0.values.copy()
    densities = [m0]
    for j in range(cfg.n_steps):
        du_int = (u_path[j, 1:] - u_path[j, :-1]) / dx
        b = v_int - lam * du_int  # -D_pH(lam Du, x) = v - lam Du
        m = transport_step(m, b, dt, dx, diffuse)
        total = m.sum() * dx
        m = m / total  # remove roundoff drift; change is O(1e-15) per step
        densities.append(GridDensity(m0.origin, dx, m))
    boundary_mass = (densities[-1].values[0] + densities[-1].values[-1]) * dx
    if boundary_mass > BOUNDARY_MASS_TOL:
        raise BoundaryLeakError(
            f"boundary cells carry {boundary_mass:.2e} mass; enlarge half_width"
        )
    return MeasurePath(cfg.times, densities)


def _blend_paths(a: MeasurePath, b: MeasurePath, theta: float) -> MeasurePath:
    out = []
    for ma, mb in zip(a.measures, b.measures):
        vals = (1.0 - theta) * ma.values + theta * mb.values
        out.append(GridDensity(ma.origin, ma.dx, vals / (vals.sum() * ma.dx)))
    return MeasurePath(a.times, out)


def _path_distance(a: MeasurePath, b: MeasurePath, n_samples: int = 9) -> float:
    idx = np.unique(np.linspace(0, len(a) - 1, n_samples).astype(int))
    return max(wasserstein1_1d(a.measures[i], b.measures[i]) for i in idx)


def solve_mfg_fixed_point(
    cfg: PdeConfig,
    ham: QuadraticDriftHamiltonian,
    kernel,
    m0: GridDensity,
) -> MfgSolution:
    """Iterate m -> u = HJB(m) -> m+ = FP(u) to a fixed point.

    Damped Picard by default (switching to fictitious-play averaging if
    the residual increases twice); non-convergence returns the best
    iterate flagged, never raises.
    """
    # warm start: best response to the frozen initial density
    frozen = MeasurePath(cfg.times, [m0] * (cfg.n_steps + 1))
    m_curr = fp_forward(cfg, ham, hjb_backward(cfg, ham, kernel, frozen), m0)
    mode = cfg.mode
    history = []
    increases = 0
    best = None
    for it in range(1, cfg.max_iterations + 1):
        u_path = hjb_backward(cfg, ham, kernel, m_curr)
        m_plus = fp_forward(cfg, ham, u_path, m0)
        residual = _path_distance(m_curr, m_plus)
        history.append(residual)
        if best is None or residual <= best[0]:
            best = (residual, u_path, m_plus, it)
        if residual < cfg.tolerance:
            return MfgSolution(cfg, u_path, m_plus, it, residual, True, tuple(history))
        if len(history) >= 2 and history[-1] > history[-2]:
            increases += 1
            if increases >= 2 and mode == "damped-picard":
                mode = "fictitious-play"
        theta = 1.0 / (it + 1.0) if mode == "fictitious-play" else cfg.theta
        m_curr = _blend_paths(m_curr, m_plus, theta)
    residual, u_path, m_path, it = best
    return MfgSolution(cfg, u_path, m_path, it, residual, False, tuple(history))
