"""Rotating shallow-water channel model, two-step Lax-Wendroff finite differences.

Geometry: periodic in x, rigid free-slip walls in y. The hyperbolic core advances
the conservative variables (h, hu, hv) with the Richtmyer two-step scheme, which
conserves total mass exactly (wall ghost cells mirror h and u evenly and v oddly,
so the wall mass flux is identically zero). Coriolis, horizontal viscosity, and
linear bottom friction are applied as a first-order source split on velocities.

The flat state vector is [u; v; h] with each field flattened in row-major
(y, x) order, so the state dimension is M = 3 * nx * ny.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BlowupError


@dataclass(frozen=True)
class SWESpec:
    """Shallow-water configuration.

    Physical parameters are documented defaults, tunable via config: gravity g,
    Coriolis parameter f, bottom friction c_b, viscosity nu, mean depth for the
    construction-time CFL check, grid spacing dx/dy.
    """

    nx: int = 64
    ny: int = 16
    dx: float = 20_000.0
    dy: float = 20_000.0
    gravity: float = 9.81
    coriolis: float = 1e-4
    friction: float = 1e-6
    viscosity: float = 1e4
    depth: float = 250.0
    dt: float = 60.0
    steps_per_observation: int = 60

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid must be at least 4x4")
        if min(self.dx, self.dy, self.dt, self.gravity, self.depth) <= 0:
            raise ValueError("dx, dy, dt, gravity, depth must be positive")
        cfl = np.sqrt(self.gravity * self.depth) * self.dt / min(self.dx, self.dy)
        if cfl >= 1.0:
            raise ValueError(
                f"CFL number sqrt(g h) dt/dx = {cfl:.3f} >= 1 at construction"
            )

    @property
    def dimension(self) -> int:
        return 3 * self.nx * self.ny

    @property
    def cycle_dt(self) -> float:
        return self.dt * self.steps_per_observation

    # -- state packing -----------------------------------------------------

    def split(self, state: np.ndarray):
        """Flat (M,) state -> (u, v, h) fields of shape (ny, nx)."""
        n = self.nx * self.ny
        u = state[:n].reshape(self.ny, self.nx)
        v = state[n:2 * n].reshape(self.ny, self.nx)
        h = state[2 * n:].reshape(self.ny, self.nx)
        return u, v, h

    def pack(self, u, v, h) -> np.ndarray:
        return np.concatenate([u.ravel(), v.ravel(), h.ravel()])

    # -- stepping ----------------------------------------------------------

    def step(self, state: np.ndarray) -> np.ndarray:
        """One internal step; accepts (M,) or a batch of column states (M, k)."""
        state = np.asarray(state, dtype=float)
        if state.ndim == 2:
            cols = [self._step_single(state[:, j]) for j in range(state.shape[1])]
            return np.stack(cols, axis=1)
        return self._step_single(state)

    def cycle_map(self, state):
        x = np.asarray(state, dtype=float)
        for _ in range(self.steps_per_observation):
            x = self.step(x)
        return x

    def _step_single(self, state: np.ndarray) -> np.ndarray:
        u, v, h = self.split(state)
        self._check_stable(u, v, h)

        g = self.gravity
        lx = self.dt / self.dx
        ly = self.dt / self.dy

        # conservative variables with one ghost layer: periodic in x,
        # reflecting in y (h, hu even; hv odd)
        hp = _pad(h, even=True)
        pp = _pad(h * u, even=True)
        qp = _pad(h * v, even=False)

        f1, f2, f3 = _flux_x(hp, pp, qp, g)
        g1, g2, g3 = _flux_y(hp, pp, qp, g)

        # half-step states on x faces (rows 1..ny of the padded arrays)
        hx = 0.5 * (hp[1:-1, 1:] + hp[1:-1, :-1]) - 0.5 * lx * (f1[1:-1, 1:] - f1[1:-1, :-1])
        px = 0.5 * (pp[1:-1, 1:] + pp[1:-1, :-1]) - 0.5 * lx * (f2[1:-1, 1:] - f2[1:-1, :-1])
        qx = 0.5 * (qp[1:-1, 1:] + qp[1:-1, :-1]) - 0.5 * lx * (f3[1:-1, 1:] - f3[1:-1, :-1])

        # half-step states on y faces (columns 1..nx)
        hy = 0.5 * (hp[1:, 1:-1] + hp[:-1, 1:-1]) - 0.5 * ly * (g1[1:, 1:-1] - g1[:-1, 1:-1])
        py = 0.5 * (pp[1:, 1:-1] + pp[:-1, 1:-1]) - 0.5 * ly * (g2[1:, 1:-1] - g2[:-1, 1:-1])
        qy = 0.5 * (qp[1:, 1:-1] + qp[:-1, 1:-1]) - 0.5 * ly * (g3[1:, 1:-1] - g3[:-1, 1:-1])

        fx1, fx2, fx3 = _flux_x(hx, px, qx, g)
        gy1, gy2, gy3 = _flux_y(hy, py, qy, g)

        h_new = h - lx * (fx1[:, 1:] - fx1[:, :-1]) - ly * (gy1[1:, :] - gy1[:-1, :])
        p_new = (h * u) - lx * (fx2[:, 1:] - fx2[:, :-1]) - ly * (gy2[1:, :] - gy2[:-1, :])
        q_new = (h * v) - lx * (fx3[:, 1:] - fx3[:, :-1]) - ly * (gy3[1:, :] - gy3[:-1, :])

        if np.any(h_new <= 0.0) or not np.all(np.isfinite(h_new)):
            raise BlowupError("shallow-water layer depth became non-positive or non-finite")

        u_new = p_new / h_new
        v_new = q_new / h_new

        # source split: exact Coriolis rotation and friction decay, explicit viscosity
        ang = self.coriolis * self.dt
        c, s = np.cos(ang), np.sin(ang)
        u_rot = c * u_new + s * v_new
        v_rot = -s * u_new + c * v_new
        decay = np.exp(-self.friction * self.dt)
        u_new = decay * u_rot + self.dt * self.viscosity * self._laplacian(u_rot, even=True)
        v_new = decay * v_rot + self.dt * self.viscosity * self._laplacian(v_rot, even=False)

        out = self.pack(u_new, v_new, h_new)
        if not np.all(np.isfinite(out)):
            raise BlowupError("shallow-water step produced non-finite values")
        return out

    def _check_stable(self, u, v, h):
        if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
            raise BlowupError("shallow-water layer depth became non-positive or non-finite")
        c = np.sqrt(self.gravity * np.max(h))
        cfl = max(
            (np.max(np.abs(u)) + c) * self.dt / self.dx,
            (np.max(np.abs(v)) + c) * self.dt / self.dy,
        )
        if cfl >= 1.0:
            raise BlowupError(f"runtime CFL violation: (|u| + sqrt(g h)) dt/dx = {cfl:.3f} >= 1")

    def _laplacian(self, a, even: bool):
        ap = _pad(a, even=even)
        return (
            (ap[1:-1, 2:] - 2.0 * ap[1:-1, 1:-1] + ap[1:-1, :-2]) / self.dx**2
            + (ap[2:, 1:-1] - 2.0 * ap[1:-1, 1:-1] + ap[:-2, 1:-1]) / self.dy**2
        )

    # -- initial condition ---------------------------------------------------

    def default_jet_state(
        self,
        jet_speed: float = 5.0,
        jet_width: float = 80_000.0,
        perturb_amplitude: float = 0.5,
    ) -> np.ndarray:
        """Geostrophically balanced zonal jet plus a small height perturbation.

        u(y) = U0 sech^2((y - y_c)/L), h(y) = depth - (f U0 L / g) tanh((y - y_c)/L);
        the perturbation seeds the barotropic instability with wavenumbers 1..3.
        """
        y = (np.arange(self.ny) + 0.5) * self.dy
        x = (np.arange(self.nx) + 0.5) * self.dx
        yc = 0.5 * self.ny * self.dy
        s = (y - yc) / jet_width

        u_prof = jet_speed / np.cosh(s) ** 2
        h_prof = self.depth - (self.coriolis * jet_speed * jet_width / self.gravity) * np.tanh(s)

        u = np.tile(u_prof[:, None], (1, self.nx))
        v = np.zeros((self.ny, self.nx))
        h = np.tile(h_prof[:, None], (1, self.nx))

        lx = self.nx * self.dx
        envelope = np.exp(-s**2)[:, None]
        phases = (0.0, 1.3, 2.1)
        for k, phase in enumerate(phases, start=1):
            h = h + perturb_amplitude * envelope * np.sin(2.0 * np.pi * k * x[None, :] / lx + phase)
        return self.pack(u, v, h)


def _pad(a: np.ndarray, even: bool) -> np.ndarray:
    """One ghost layer: periodic in x (axis 1), reflected in y (axis 0).

    even=True mirrors the boundary row unchanged (h, u and x-momentum);
    even=False mirrors with a sign flip (v and y-momentum), which zeroes the
    wall-normal flow at the wall faces.
    """
    a = np.concatenate([a[:, -1:], a, a[:, :1]], axis=1)
    sign = 1.0 if even else -1.0
    return np.concatenate([sign * a[:1, :], a, sign * a[-1:, :]], axis=0)


def _flux_x(h, p, q, g):
    """x-direction flux of (h, hu, hv): (hu, hu^2 + g h^2/2, huv)."""
    u = p / h
    return p, p * u + 0.5 * g * h * h, q * u


def _flux_y(h, p, q, g):
    """y-direction flux of (h, hu, hv): (hv, huv, hv^2 + g h^2/2)."""
    v = q / h
    return q, p * v, q * v + 0.5 * g * h * h


def swe_step(state: np.ndarray, spec: SWESpec) -> np.ndarray:
    """One Lax-Wendroff step of the flat [u; v; h] state."""
    return spec.step(state)
