"""Epsilon-geodesic boundary value problems and their vanishing-viscosity limits.

The two-point problem for a path u(t) between fixed admissible endpoints is,
per interior time knot,

    D_t^2 u = ((1/2)|grad udot|^2 + epsilon) / rho_u,

with centered time differences on a uniform knot grid.  Solutions for
epsilon > 0 are produced by a damped matrix-free Newton iteration (Krylov
linear solves preconditioned by a constant-coefficient space-time operator
diagonalized by sine and Fourier transforms), with nonlinear Gauss-Seidel
sweeps over time slices as a fallback.  Weak geodesics arise as warm-started
continuation limits along a halving epsilon schedule.

Jacobi fields along an epsilon-geodesic are central differences of
endpoint-perturbed solution families; the second-order Jacobi equation then
serves as an independent residual check on them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator, lgmres

from .errors import NonConvergence, NotKahler, PerturbationTooLarge, PositivityLoss
from .grid import (
    Grid,
    GridField,
    Potential,
    _frozen,
    dx,
    dy,
    f_density,
    laplacian,
    make_potential,
    poisson_bracket,
)
from .lagrangians import CheckReport
from .transport import PotentialPath, covariant_derivative

_LINE_SEARCH_HALVINGS = 30


@dataclass(frozen=True)
class EpsGeodesicProblem:
    """Two-point boundary data for the regularized geodesic equation."""

    endpoint_a: Potential
    endpoint_b: Potential
    interval: tuple[float, float]
    epsilon: float
    time_steps: int = 32
    solver_tol: float = 1e-8
    max_iter: int = 60

    def __post_init__(self):
        if self.endpoint_a.grid != self.endpoint_b.grid:
            raise ValueError("endpoints must share one grid")
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.time_steps < 2:
            raise ValueError("need at least two time steps")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @property
    def grid(self) -> Grid:
        return self.endpoint_a.grid

    @property
    def times(self) -> NDArray[np.float64]:
        a, b = self.interval
        return np.linspace(a, b, self.time_steps + 1)


@dataclass(frozen=True, eq=False)
class GeodesicSolution:
    """Solved path with the attained residual and iteration count."""

    path: PotentialPath
    residual_norm: float
    epsilon: float
    iterations: int


@lru_cache(maxsize=32)
def _spatial_symbol(grid: Grid) -> NDArray[np.float64]:
    """Fourier multiplier of the grid Laplacian (nonpositive)."""
    n = grid.n
    k = np.fft.fftfreq(n, d=1.0 / n)
    if grid.scheme == "spectral":
        lam = -4.0 * np.pi**2 * (k[:, None] ** 2 + k[None, :] ** 2)
    else:
        s = np.sin(np.pi * k / n) ** 2
        lam = -4.0 * n**2 * (s[:, None] + s[None, :])
    lam.setflags(write=False)
    return lam


def _interior_residual(fields, dt, eps, grid):
    """Residual, density, velocity gradient, and forcing at interior knots."""
    rho = 1.0 + 0.5 * laplacian(fields, grid)
    udot = (fields[2:] - fields[:-2]) / (2.0 * dt)
    gx, gy = dx(udot, grid), dy(udot, grid)
    forcing = 0.5 * (gx * gx + gy * gy) + eps
    second = (fields[2:] - 2.0 * fields[1:-1] + fields[:-2]) / dt**2
    res = second - forcing / rho[1:-1]
    return res, rho, gx, gy, forcing


def _jacobian_operator(fields, dt, grid, rho, gx, gy, forcing):
    """Matrix-free directional derivative of the interior residual."""
    m_int = fields.shape[0] - 2
    n = grid.n
    rho_i = rho[1:-1]

    def matvec(flat):
        v = np.zeros_like(fields)
        v[1:-1] = flat.reshape(m_int, n, n)
        vdot = (v[2:] - v[:-2]) / (2.0 * dt)
        second = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt**2
        out = (
            second
            - (gx * dx(vdot, grid) + gy * dy(vdot, grid)) / rho_i
            + forcing * (0.5 * laplacian(v[1:-1], grid)) / rho_i**2
        )
        return out.ravel()

    size = m_int * n * n
    return LinearOperator((size, size), matvec=matvec, dtype=float)


def _preconditioner(m_int, dt, grid, coeff):
    """Inverse of D_t^2 + coeff * Laplacian, diagonal in sine x Fourier modes."""
    lam_t = (2.0 * np.cos(np.pi * np.arange(1, m_int + 1) / (m_int + 1)) - 2.0) / dt**2
    denom = lam_t[:, None, None] + coeff * _spatial_symbol(grid)[None, :, :]
    n = grid.n

    def solve(flat):
        w = flat.reshape(m_int, n, n)
        w = scipy.fft.dst(w, type=1, axis=0, norm="ortho")
        w = np.fft.fft2(w, axes=(-2, -1))
        w = np.fft.ifft2(w / denom, axes=(-2, -1)).real
        w = scipy.fft.dst(w, type=1, axis=0, norm="ortho")
        return w.ravel()

    size = m_int * n * n
    return LinearOperator((size, size), matvec=solve, dtype=float)


def _default_initial(p: EpsGeodesicProblem) -> NDArray[np.float64]:
    """Linear endpoint interpolation plus the spatially constant sag."""
    a, b = p.interval
    tau = p.times - a
    span = b - a
    lam = (tau / span)[:, None, None]
    sag = 0.5 * p.epsilon * (tau * (tau - span))[:, None, None]
    return (1.0 - lam) * p.endpoint_a.field + lam * p.endpoint_b.field + sag


def _gauss_seidel_sweeps(fields, dt, eps, grid, sweeps):
    """Slice relaxation u_i += (dt^2/2) r_i, damped to keep densities positive."""
    fields = fields.copy()
    for _ in range(sweeps):
        for i in range(1, fields.shape[0] - 1):
            rho_i = 1.0 + 0.5 * laplacian(fields[i], grid)
            udot = (fields[i + 1] - fields[i - 1]) / (2.0 * dt)
            gxi, gyi = dx(udot, grid), dy(udot, grid)
            forcing = 0.5 * (gxi * gxi + gyi * gyi) + eps
            second = (fields[i + 1] - 2.0 * fields[i] + fields[i - 1]) / dt**2
            update = 0.5 * dt**2 * (second - forcing / rho_i)
            scale = 0.8
            for _ in range(_LINE_SEARCH_HALVINGS):
                trial = fields[i] + scale * update
                if float((1.0 + 0.5 * laplacian(trial, grid)).min()) > 0.0:
                    break
                scale *= 0.5
            else:
                bad = np.unravel_index(np.argmin(1.0 + 0.5 * laplacian(trial, grid)), trial.shape)
                raise PositivityLoss(i, bad)
            fields[i] = trial
    return fields


def solve_epsilon_geodesic(
    p: EpsGeodesicProblem, initial: NDArray[np.float64] | None = None
) -> GeodesicSolution:
    """Solve the two-point problem for epsilon > 0 by damped Newton iteration.

    initial optionally warm-starts the iteration with a full knot stack
    (endpoints are overwritten with the problem data).

    Raises:
        NonConvergence: if max_iter Newton steps leave the residual above tol.
        PositivityLoss: if damping cannot keep an iterate admissible.
    """
    if p.epsilon <= 0:
        raise ValueError("solve_epsilon_geodesic needs epsilon > 0")
    grid = p.grid
    m = p.time_steps
    a, b = p.interval
    dt = (b - a) / m
    fields = np.array(initial, dtype=float) if initial is not None else _default_initial(p)
    if fields.shape != (m + 1, grid.n, grid.n):
        raise ValueError("initial guess must provide one field per knot")
    fields[0] = p.endpoint_a.field
    fields[-1] = p.endpoint_b.field

    res, rho, gx, gy, forcing = _interior_residual(fields, dt, p.epsilon, grid)
    res_norm = float(np.abs(res).max())
    iterations = 0
    for iterations in range(1, p.max_iter + 1):
        if res_norm <= p.solver_tol:
            break
        op = _jacobian_operator(fields, dt, grid, rho, gx, gy, forcing)
        coeff = float(np.mean(forcing / (2.0 * rho[1:-1] ** 2)))
        prec = _preconditioner(m - 1, dt, grid, coeff)
        step, _ = lgmres(op, -res.ravel(), M=prec, rtol=1e-4, atol=0.0, maxiter=40)
        step = step.reshape(m - 1, grid.n, grid.n)

        alpha = 1.0
        accepted = False
        positivity_failed_everywhere = True
        worst = None
        for _ in range(_LINE_SEARCH_HALVINGS + 1):
            trial = fields.copy()
            trial[1:-1] += alpha * step
            t_res, t_rho, t_gx, t_gy, t_forcing = _interior_residual(
                trial, dt, p.epsilon, grid
            )
            min_rho = float(t_rho.min())
            if min_rho <= 0.0:
                flat = int(np.argmin(t_rho))
                worst = np.unravel_index(flat, t_rho.shape)
                alpha *= 0.5
                continue
            positivity_failed_everywhere = False
            t_norm = float(np.abs(t_res).max())
            if t_norm < res_norm:
                fields = trial
                res, rho, gx, gy, forcing = t_res, t_rho, t_gx, t_gy, t_forcing
                res_norm = t_norm
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if positivity_failed_everywhere and worst is not None:
                raise PositivityLoss(int(worst[0]), (int(worst[1]), int(worst[2])))
            fields = _gauss_seidel_sweeps(fields, dt, p.epsilon, grid, sweeps=3)
            res, rho, gx, gy, forcing = _interior_residual(fields, dt, p.epsilon, grid)
            res_norm = float(np.abs(res).max())
    else:
        raise NonConvergence(p.max_iter, res_norm)
    if res_norm > p.solver_tol:
        raise NonConvergence(iterations, res_norm)

    knots = [p.endpoint_a]
    knots.extend(make_potential(fields[i], grid) for i in range(1, m))
    knots.append(p.endpoint_b)
    path = PotentialPath(_frozen(p.times), tuple(knots), "solver-native")
    return GeodesicSolution(path, res_norm, p.epsilon, iterations - 1)


def epsilon_continuation(
    u_a: Potential,
    u_b: Potential,
    interval: tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-6,
    time_steps: int = 32,
    solver_tol: float = 1e-8,
    max_levels: int = 60,
) -> list[GeodesicSolution]:
    """Warm-started solves along the halving schedule epsilon = 1, 1/2, 1/4, ...

    Stops once successive solutions differ by less than tol in sup norm.
    """
    problem = EpsGeodesicProblem(u_a, u_b, interval, 1.0, time_steps, solver_tol)
    sols = [solve_epsilon_geodesic(problem)]
    for _ in range(max_levels):
        problem = replace(problem, epsilon=problem.epsilon / 2.0)
        nxt = solve_epsilon_geodesic(problem, initial=sols[-1].path.fields)
        gap = float(np.abs(nxt.path.fields - sols[-1].path.fields).max())
        sols.append(nxt)
        if gap < tol:
            return sols
    raise NonConvergence(max_levels, gap)


def weak_geodesic(
    u_a: Potential,
    u_b: Potential,
    interval: tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-6,
    time_steps: int = 32,
    solver_tol: float = 1e-8,
) -> PotentialPath:
    """Vanishing-regularization limit path between two admissible potentials."""
    sols = epsilon_continuation(u_a, u_b, interval, tol, time_steps, solver_tol)
    return sols[-1].path


def hcma_residual(path: PotentialPath) -> NDArray[np.float64]:
    """c(t, x) = udotdot rho_u - (1/2)|grad udot|^2 at interior knots.

    Vanishes for weak geodesics and equals epsilon for epsilon-geodesics.
    """
    if len(path.knots) < 3:
        raise ValueError("need at least three knots")
    steps = np.diff(path.times)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
        raise ValueError("knot times must be uniformly spaced")
    dt = float(steps[0])
    g = path.grid
    f = path.fields
    udot = (f[2:] - f[:-2]) / (2.0 * dt)
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dt**2
    gx, gy = dx(udot, g), dy(udot, g)
    return second * path.densities[1:-1] - 0.5 * (gx * gx + gy * gy)


def time_convexity_margin(path: PotentialPath) -> float:
    """Min over interior knots and cells of the second time difference."""
    steps = np.diff(path.times)
    dt = float(steps[0])
    f = path.fields
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dt**2
    return float(second.min())


def sup_distance(a: PotentialPath, b: PotentialPath) -> float:
    """Sup over knots and cells of the field difference."""
    return float(np.abs(a.fields - b.fields).max())


def jacobi_field(
    p: EpsGeodesicProblem,
    direction_a: GridField,
    direction_b: GridField,
    delta: float = 1e-3,
) -> NDArray[np.float64]:
    """Per-knot variation field by central differencing of a perturbed family.

    Solves the problem with endpoints shifted by +delta and -delta times the
    given directions and returns the difference quotient stack.

    Raises:
        PerturbationTooLarge: if a shifted endpoint leaves the admissible set.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    grid = p.grid

    def shifted(sign):
        try:
            ea = make_potential(p.endpoint_a.field + sign * delta * direction_a, grid)
            eb = make_potential(p.endpoint_b.field + sign * delta * direction_b, grid)
        except NotKahler as exc:
            raise PerturbationTooLarge(
                f"endpoint shift of size {delta:g} leaves the admissible set"
            ) from exc
        return replace(p, endpoint_a=ea, endpoint_b=eb)

    base = _default_initial(p)
    lam = ((p.times - p.interval[0]) / (p.interval[1] - p.interval[0]))[:, None, None]
    ramp = (1.0 - lam) * direction_a + lam * direction_b
    plus = solve_epsilon_geodesic(shifted(+1.0), initial=base + delta * ramp)
    minus = solve_epsilon_geodesic(shifted(-1.0), initial=plus.path.fields - 2.0 * delta * ramp)
    return (plus.path.fields - minus.path.fields) / (2.0 * delta)


def _centered_covariant(path: PotentialPath, fields: NDArray[np.float64], lo: int, hi: int):
    """Covariant time derivative with centered quotients at knots lo..hi-1.

    fields covers knots lo-1..hi; the returned stack covers lo..hi-1, each
    entry using only its two immediate neighbors.
    """
    g = path.grid
    dt = float(path.times[1] - path.times[0])
    xidot = (fields[2:] - fields[:-2]) / (2.0 * dt)
    f = path.fields[lo - 1 : hi + 1]
    udot = (f[2:] - f[:-2]) / (2.0 * dt)
    mid = fields[1:-1]
    rho = path.densities[lo:hi]
    pairing = (dx(udot, g) * dx(mid, g) + dy(udot, g) * dy(mid, g)) / rho
    return xidot - 0.5 * pairing


def jacobi_residual(sol: GeodesicSolution, xi: NDArray[np.float64]) -> float:
    """Sup norm of the linearized geodesic equation applied to xi.

    The discrete equation checked is

        rho_u grad_t^2 xi = (1/4){{udot, xi}, udot} rho_u
                            - (eps/2) div(F(u) grad xi),

    with grad_t the covariant derivative realized by nested centered
    quotients, the Poisson brackets from the grid operations, and
    F = 1/rho_u.

    The sup runs over knots in the middle third of the interval.  Endpoint
    data is only finitely compatible with the equation, so the outermost
    knots carry a persistent layer in higher time derivatives; interior
    consistency at the nominal order holds away from it.
    """
    path = sol.path
    xi = np.asarray(xi, dtype=float)
    if xi.shape != path.fields.shape:
        raise ValueError("xi must provide one field per knot")
    m = len(path.knots) - 1
    if m < 4:
        raise ValueError("need at least four time intervals")
    g = path.grid
    first = _centered_covariant(path, xi, 1, m)
    second = _centered_covariant(path, first, 2, m - 1)
    udot = (path.fields[3:-1] - path.fields[1:-3]) / (2.0 * float(path.times[1] - path.times[0]))
    inner_knots = range(2, m - 1)
    bracket = np.empty_like(second)
    div_term = np.empty_like(second)
    for j, i in enumerate(inner_knots):
        u = path.knots[i]
        inner = poisson_bracket(u, udot[j], xi[i])
        bracket[j] = poisson_bracket(u, inner, udot[j])
        flux_x = f_density(u) * dx(xi[i], g)
        flux_y = f_density(u) * dy(xi[i], g)
        div_term[j] = dx(flux_x, g) + dy(flux_y, g)
    rho = path.densities[2 : m - 1]
    residual = rho * second - 0.25 * bracket * rho + 0.5 * sol.epsilon * div_term
    lo = max((m + 2) // 3, 2)
    hi = min((2 * m) // 3, m - 2)
    return float(np.abs(residual[lo - 2 : hi - 1]).max())


def monotone_limit_check(
    u_a_seq: list[Potential],
    u_b_seq: list[Potential],
    u_a: Potential,
    u_b: Potential,
    tol: float = 1e-6,
    interval: tuple[float, float] = (0.0, 1.0),
    time_steps: int = 32,
) -> CheckReport:
    """Decreasing endpoint sequences should give pointwise decreasing geodesics.

    Solves the weak geodesic for each endpoint pair and for the limit pair,
    then reports the worst monotonicity margin (most negative pointwise drop
    between consecutive paths and against the limit path) and the final
    sup-distance to the limit.
    """
    if len(u_a_seq) != len(u_b_seq) or not u_a_seq:
        raise ValueError("need matching nonempty endpoint sequences")
    slack = 1e-12
    for seq, limit in ((u_a_seq, u_a), (u_b_seq, u_b)):
        for earlier, later in zip(seq, seq[1:]):
            if float((earlier.field - later.field).min()) < -slack:
                raise ValueError("endpoint sequences must decrease pointwise")
        if float((seq[-1].field - limit.field).min()) < -slack:
            raise ValueError("endpoint sequences must dominate their limit")

    paths = [
        weak_geodesic(a, b, interval, tol, time_steps) for a, b in zip(u_a_seq, u_b_seq)
    ]
    limit_path = weak_geodesic(u_a, u_b, interval, tol, time_steps)
    worst = np.inf
    violations = 0
    for earlier, later in zip(paths, paths[1:]):
        margin = float((earlier.fields - later.fields).min())
        worst = min(worst, margin)
        violations += int(margin < -tol)
    for path in paths:
        margin = float((path.fields - limit_path.fields).min())
        worst = min(worst, margin)
        violations += int(margin < -tol)
    final_gap = sup_distance(paths[-1], limit_path)
    return CheckReport(
        name="monotone-limit",
        passed=violations == 0,
        worst=worst,
        tolerance=tol,
        details={"violations": violations, "final_sup_distance": final_gap},
    )
