"""Paths of potentials, parallel transport, and Hamiltonian flows.

Parallel transport along a path u(t) integrates the time-dependent vector
field -(1/2) grad_{u(t)} udot(t); the resulting maps are symplectomorphisms
(X, omega_{u(0)}) -> (X, omega_{u(t)}) up to discretization, which the
pullback-density identity rho_{u(t)}(phi(x)) J(x) = rho_{u(0)}(x) quantifies.
Hamiltonian flows integrate sgrad zeta = (-zeta_y, zeta_x)/rho_u for the
symplectic form of a fixed potential.

Trajectories are integrated with the classical 4-stage explicit scheme from
all cell centers at once, velocity fields sampled bilinearly in space and
linearly in time; positions use exact mod-1 torus arithmetic.  Displacement
fields are stored unwrapped (they are periodic functions of the seed), and
map Jacobians come from differencing the displacement with the grid scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import NonConvergence, NotKahler, StepUnstable
from .grid import Grid, GridField, Potential, _frozen, dx, dy, make_potential

INTERPOLATIONS = ("piecewise-linear", "solver-native")


def bilinear_periodic(field: GridField, px: GridField, py: GridField, n: int) -> GridField:
    """Sample a grid field at arbitrary torus points by periodic bilinear interpolation."""
    gx = px * n
    gy = py * n
    i0 = np.floor(gx).astype(int)
    j0 = np.floor(gy).astype(int)
    fx = gx - i0
    fy = gy - j0
    i0 %= n
    j0 %= n
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    return (
        field[i0, j0] * (1.0 - fx) * (1.0 - fy)
        + field[i1, j0] * fx * (1.0 - fy)
        + field[i0, j1] * (1.0 - fx) * fy
        + field[i1, j1] * fx * fy
    )


def spectral_interp(field: GridField, px: GridField, py: GridField) -> GridField:
    """Evaluate the trigonometric interpolant of a grid field at arbitrary points."""
    n = field.shape[-1]
    coef = np.fft.fft2(field) / n**2
    k = np.fft.fftfreq(n, d=1.0 / n)
    shape = px.shape
    ex = np.exp(2j * np.pi * np.outer(px.ravel(), k))
    ey = np.exp(2j * np.pi * np.outer(py.ravel(), k))
    vals = np.einsum("pk,kl,pl->p", ex, coef, ey, optimize=True)
    return vals.real.reshape(shape)


def interp_at(field: GridField, px: GridField, py: GridField, grid: Grid) -> GridField:
    if grid.scheme == "spectral":
        return spectral_interp(field, px, py)
    return bilinear_periodic(field, px, py, grid.n)


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Discrete map of the torus: per-cell displacement plus its Jacobian.

    forward() gives target coordinates mod 1; the displacement itself is kept
    unwrapped so it stays a smooth periodic function of the seed cell.
    """

    grid: Grid
    disp_x: GridField
    disp_y: GridField
    jacobian: GridField

    def __post_init__(self):
        if float(self.jacobian.min()) <= 0.0:
            raise ValueError("transport map must preserve orientation: jacobian > 0")

    def forward(self) -> tuple[GridField, GridField]:
        x, y = self.grid.coords()
        return np.mod(x + self.disp_x, 1.0), np.mod(y + self.disp_y, 1.0)

    @property
    def is_identity(self) -> bool:
        return not (self.disp_x.any() or self.disp_y.any())

    @classmethod
    def identity(cls, grid: Grid) -> "TransportMap":
        zero = np.zeros((grid.n, grid.n))
        return cls(grid, _frozen(zero), _frozen(zero), _frozen(np.ones_like(zero)))

    @classmethod
    def from_displacement(cls, grid: Grid, disp_x: GridField, disp_y: GridField) -> "TransportMap":
        jac = (1.0 + dx(disp_x, grid)) * (1.0 + dy(disp_y, grid)) - dy(disp_x, grid) * dx(
            disp_y, grid
        )
        return cls(grid, _frozen(disp_x), _frozen(disp_y), _frozen(jac))


def compose(after: TransportMap, before: TransportMap) -> TransportMap:
    """Map doing `before` first, then `after` (displacements interpolated)."""
    if before.is_identity:
        return after
    if after.is_identity:
        return before
    px, py = before.forward()
    g = before.grid
    disp_x = before.disp_x + interp_at(after.disp_x, px, py, g)
    disp_y = before.disp_y + interp_at(after.disp_y, px, py, g)
    return TransportMap.from_displacement(g, disp_x, disp_y)


def map_distance(a: TransportMap, b: TransportMap) -> float:
    """Sup over cells of the torus distance between the two images."""
    ddx = np.mod(a.disp_x - b.disp_x + 0.5, 1.0) - 0.5
    ddy = np.mod(a.disp_y - b.disp_y + 0.5, 1.0) - 0.5
    return float(np.hypot(ddx, ddy).max())


def inverse(phi: TransportMap, iterations: int = 60, tol: float = 1e-13) -> TransportMap:
    """Inverse map by fixed-point iteration on d_inv(x) = -d(x + d_inv(x)).

    Converges when the displacement is a contraction (sup |grad d| < 1), which
    holds for resolved flows.

    Raises:
        NonConvergence: if the iteration stalls above tol.
    """
    if phi.is_identity:
        return phi
    g = phi.grid
    x0, y0 = g.coords()
    qx = -phi.disp_x
    qy = -phi.disp_y
    for _ in range(iterations):
        px = np.mod(x0 + qx, 1.0)
        py = np.mod(y0 + qy, 1.0)
        nx = -interp_at(phi.disp_x, px, py, g)
        ny = -interp_at(phi.disp_y, px, py, g)
        change = max(float(np.abs(nx - qx).max()), float(np.abs(ny - qy).max()))
        qx, qy = nx, ny
        if change < tol:
            break
    else:
        raise NonConvergence(iterations, change)
    return TransportMap.from_displacement(g, qx, qy)


@dataclass(frozen=True, eq=False)
class PotentialPath:
    """Discrete path of potentials over increasing knot times.

    interpolation "piecewise-linear" means the path is the linear interpolant
    of the knots (competitor paths); segments are admission-tested at their
    midpoints since a linear segment between potentials could exit the
    admissible space.  "solver-native" marks knots produced by the geodesic
    solver, differenced centrally.
    """

    times: NDArray[np.float64]
    knots: tuple[Potential, ...]
    interpolation: str

    def __post_init__(self):
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
        if len(self.knots) < 2:
            raise ValueError("a path needs at least two knots")
        if self.times.shape != (len(self.knots),):
            raise ValueError("need exactly one time per knot")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        g = self.knots[0].grid
        if any(k.grid != g for k in self.knots):
            raise ValueError("all knots must share one grid")
        if self.interpolation == "piecewise-linear":
            dens = self.densities
            mid = 0.5 * (dens[:-1] + dens[1:])
            m = float(mid.min())
            if m <= 0.0:
                raise NotKahler(m)

    @property
    def grid(self) -> Grid:
        return self.knots[0].grid

    @property
    def intervals(self) -> int:
        return len(self.knots) - 1

    @cached_property
    def fields(self) -> NDArray[np.float64]:
        return np.stack([k.field for k in self.knots])

    @cached_property
    def densities(self) -> NDArray[np.float64]:
        return np.stack([k.density for k in self.knots])


def linear_path(
    u_a: Potential, u_b: Potential, t_start: float, t_end: float, intervals: int
) -> PotentialPath:
    """Linear interpolant of two potentials sampled on a uniform time grid."""
    times = np.linspace(t_start, t_end, intervals + 1)
    s = np.linspace(0.0, 1.0, intervals + 1)
    g = u_a.grid
    knots = [u_a]
    for si in s[1:-1]:
        knots.append(make_potential((1.0 - si) * u_a.field + si * u_b.field, g))
    knots.append(u_b)
    return PotentialPath(_frozen(times), tuple(knots), "piecewise-linear")


@dataclass(frozen=True, eq=False)
class PathVelocity:
    """Difference-quotient velocities along a path.

    kind "interval": one field per interval (the right derivative at each left
    knot), the piecewise-linear case.  kind "knot": one field per knot from
    2nd-order differencing, the solver-native case.
    """

    times: NDArray[np.float64]
    fields: NDArray[np.float64]
    kind: str


def velocity(path: PotentialPath) -> PathVelocity:
    """Velocity of a path by the differencing matching its interpolation."""
    f = path.fields
    t = path.times
    if path.interpolation == "piecewise-linear":
        quot = np.diff(f, axis=0) / np.diff(t)[:, None, None]
        return PathVelocity(_frozen(t[:-1]), _frozen(quot), "interval")
    return PathVelocity(_frozen(t), _frozen(np.gradient(f, t, axis=0, edge_order=2)), "knot")


def knot_velocities(path: PotentialPath) -> NDArray[np.float64]:
    """Per-knot velocity fields regardless of interpolation.

    Piecewise-linear paths use the right quotient at every knot and the left
    quotient at the final one.
    """
    v = velocity(path)
    if v.kind == "knot":
        return v.fields
    return np.concatenate([v.fields, v.fields[-1:]], axis=0)


def _interval_velocity_fields(path: PotentialPath):
    """Transported vector field -(1/2) grad udot at both ends of each interval."""
    g = path.grid
    dens = path.densities
    if path.interpolation == "piecewise-linear":
        quot = np.diff(path.fields, axis=0) / np.diff(path.times)[:, None, None]
        fx, fy = dx(quot, g), dy(quot, g)
        wxl, wyl = -0.5 * fx / dens[:-1], -0.5 * fy / dens[:-1]
        wxr, wyr = -0.5 * fx / dens[1:], -0.5 * fy / dens[1:]
    else:
        vel = np.gradient(path.fields, path.times, axis=0, edge_order=2)
        wx = -0.5 * dx(vel, g) / dens
        wy = -0.5 * dy(vel, g) / dens
        wxl, wyl, wxr, wyr = wx[:-1], wy[:-1], wx[1:], wy[1:]
    return wxl, wyl, wxr, wyr


def _advance_rk4(px, py, sample, t0, dt):
    """One 4-stage step of dX/dt = v(t, X) with sample(theta, px, py) -> (vx, vy)."""
    k1x, k1y = sample(t0, px, py)
    k2x, k2y = sample(t0 + 0.5 * dt, px + 0.5 * dt * k1x, py + 0.5 * dt * k1y)
    k3x, k3y = sample(t0 + 0.5 * dt, px + 0.5 * dt * k2x, py + 0.5 * dt * k2y)
    k4x, k4y = sample(t0 + dt, px + dt * k3x, py + dt * k3y)
    nx = px + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    ny = py + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return nx, ny


def _flow_positions(grid, wxl, wyl, wxr, wyr, t_knots, substeps):
    """Integrate all cell centers through the per-interval velocity fields.

    Yields unwrapped positions after each knot interval.
    """
    h = grid.cell_width
    px, py = grid.coords()
    px = px.copy()
    py = py.copy()
    for i in range(len(t_knots) - 1):
        span = t_knots[i + 1] - t_knots[i]
        dt = span / substeps

        def sample(theta, qx, qy, i=i, span=span):
            lam = theta / span
            vx = (1.0 - lam) * wxl[i] + lam * wxr[i]
            vy = (1.0 - lam) * wyl[i] + lam * wyr[i]
            qxm = np.mod(qx, 1.0)
            qym = np.mod(qy, 1.0)
            sx = bilinear_periodic(vx, qxm, qym, grid.n)
            sy = bilinear_periodic(vy, qxm, qym, grid.n)
            if dt * float(np.hypot(sx, sy).max()) > h:
                raise StepUnstable(
                    f"substep displacement exceeds one cell width (dt={dt:g}); increase substeps"
                )
            return sx, sy

        for s in range(substeps):
            px, py = _advance_rk4(px, py, sample, s * dt, dt)
        yield px.copy(), py.copy()


def transport_flow(path: PotentialPath, substeps: int = 4) -> list[TransportMap]:
    """Parallel-transport maps phi(t_i) along the path; phi(t_0) is the identity.

    Raises:
        StepUnstable: if a substep would move a particle more than one cell.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    g = path.grid
    wxl, wyl, wxr, wyr = _interval_velocity_fields(path)
    x0, y0 = g.coords()
    maps = [TransportMap.identity(g)]
    for px, py in _flow_positions(g, wxl, wyl, wxr, wyr, path.times, substeps):
        maps.append(TransportMap.from_displacement(g, px - x0, py - y0))
    return maps


def pullback(xi: GridField, phi: TransportMap) -> GridField:
    """Composition xi o phi by interpolation; bit-exact for the identity map."""
    if phi.is_identity:
        return np.array(xi, dtype=float)
    px, py = phi.forward()
    return interp_at(np.asarray(xi, dtype=float), px, py, phi.grid)


def covariant_derivative(path: PotentialPath, fields: NDArray[np.float64]) -> NDArray[np.float64]:
    """Covariant time derivative of a field along a path, per knot.

    Returns xidot(t) - (1/2) (d udot(t), d xi(t))_{u(t)} with xidot and udot by
    the differencing matching the path's interpolation (right quotients for
    piecewise-linear, 2nd-order gradients for solver-native).
    """
    fields = np.asarray(fields, dtype=float)
    if fields.shape != path.fields.shape:
        raise ValueError("field stack must provide one field per knot")
    g = path.grid
    t = path.times
    if path.interpolation == "piecewise-linear":
        def ddt(a):
            quot = np.diff(a, axis=0) / np.diff(t)[:, None, None]
            return np.concatenate([quot, quot[-1:]], axis=0)

        udot = ddt(path.fields)
        xidot = ddt(fields)
    else:
        udot = np.gradient(path.fields, t, axis=0, edge_order=2)
        xidot = np.gradient(fields, t, axis=0, edge_order=2)
    pairing = (dx(udot, g) * dx(fields, g) + dy(udot, g) * dy(fields, g)) / path.densities
    return xidot - 0.5 * pairing


def _hamiltonian_fields(zeta_frames: NDArray[np.float64], u: Potential):
    """sgrad zeta = (-zeta_y, zeta_x)/rho_u for each time frame."""
    g = u.grid
    z = np.asarray(zeta_frames, dtype=float)
    if z.ndim == 2:
        z = z[None]
    return -dy(z, g) / u.density, dx(z, g) / u.density


def symplectic_flow(zeta_frames: NDArray[np.float64], u: Potential, substeps: int = 16) -> TransportMap:
    """Time-1 map of the Hamiltonian flow of a time family zeta on (X, omega_u).

    zeta_frames has shape (k, n, n) read at equally spaced times covering
    [0, 1] (a single frame means an autonomous field), linearly interpolated
    in time; substeps counts integrator steps per frame interval.

    Raises:
        StepUnstable: as in transport_flow.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    g = u.grid
    vx, vy = _hamiltonian_fields(zeta_frames, u)
    k = vx.shape[0]
    if k == 1:
        t_knots = np.array([0.0, 1.0])
        wxl, wyl, wxr, wyr = vx, vy, vx, vy
    else:
        t_knots = np.linspace(0.0, 1.0, k)
        wxl, wyl, wxr, wyr = vx[:-1], vy[:-1], vx[1:], vy[1:]
    x0, y0 = g.coords()
    last = None
    for px, py in _flow_positions(g, wxl, wyl, wxr, wyr, t_knots, substeps):
        last = (px, py)
    return TransportMap.from_displacement(g, last[0] - x0, last[1] - y0)


def composition_scheme(
    zeta_frames: NDArray[np.float64], k: int, u: Potential, substeps_per_leg: int = 8
) -> TransportMap:
    """1-step composition of frozen-time Hamiltonian flows.

    Builds the composition of the time-(1/k) flows of the autonomous fields
    sgrad zeta(j/k), j = 0 .. k-1, applied in time order.  Converges to the
    directly integrated time-dependent flow as k grows.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    z = np.asarray(zeta_frames, dtype=float)
    if z.ndim == 2:
        z = z[None]
    frame_times = np.linspace(0.0, 1.0, z.shape[0]) if z.shape[0] > 1 else np.array([0.0])

    def frame_at(s: float) -> GridField:
        if z.shape[0] == 1:
            return z[0]
        j = min(np.searchsorted(frame_times, s, side="right"), z.shape[0] - 1)
        lam = (s - frame_times[j - 1]) / (frame_times[j] - frame_times[j - 1])
        return (1.0 - lam) * z[j - 1] + lam * z[j]

    total = TransportMap.identity(u.grid)
    for j in range(k):
        frozen = frame_at(j / k)
        leg = symplectic_flow(frozen[None] * (1.0 / k), u, substeps=substeps_per_leg)
        total = compose(leg, total)
    return total
