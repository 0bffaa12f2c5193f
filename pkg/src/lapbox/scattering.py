"""Wave-operator approximants W(t) = exp(itH) exp(-itH0) and completeness diagnostics.

Everything runs on one periodic torus sized for the longest composite
flow, so the torus results coincide with the lattice ones up to the
kernel tail beyond the wraparound budget.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import BudgetError, ConfigError
from .evolution import (
    DEFAULT_MARGIN,
    ChebyshevSpec,
    budget_half_width,
    chebyshev_propagate,
    free_propagate_torus,
    gershgorin_interval,
    grid_for,
    hamiltonian,
)
from .birman_schwinger import bound_state_vectors, bound_states
from .lattice import DualGrid, LatticeBox, LatticeFunction, from_torus, to_torus
from .potential import Potential

__all__ = [
    "WavePacket",
    "WaveOperatorTrace",
    "TorusStack",
    "wave_apply",
    "intertwining_check",
    "completeness_diagnostic",
    "random_local_state",
]

CRITICAL_MARGIN = 0.25


def _torus_dist(xi, xi0):
    dx = (np.asarray(xi) - np.asarray(xi0) + 0.5) % 1.0 - 0.5
    return np.linalg.norm(dx, axis=-1)


@dataclass(frozen=True, eq=False)
class WavePacket:
    """A unit vector ``psi0`` with momentum support declared as a ball.

    ``xi0`` and ``radius`` describe the window on the torus ``[0, 1)^d``;
    the window must keep ``CRITICAL_MARGIN`` away from the critical points
    of ``h0`` (coordinates in ``{0, 1/2}``).
    """

    psi0: LatticeFunction
    xi0: tuple
    radius: float

    def __post_init__(self):
        n = np.linalg.norm(self.psi0.flat())
        if abs(n - 1) > 1e-12:
            raise ConfigError(f"wave packet must have unit norm, got {n}")
        if self.critical_distance() < CRITICAL_MARGIN:
            raise ConfigError(
                f"momentum window comes within {self.critical_distance():.3g} of a critical point"
            )

    @classmethod
    def gaussian(cls, d: int, xi0, sigma: float, radius: float, x0=None, amp_tol: float = 1e-10) -> "WavePacket":
        """``exp(-|x - x0|^2 / (2 sigma^2) + 2 pi i xi0.x)``, cut where the amplitude is below ``amp_tol``."""
        x0 = np.zeros(d) if x0 is None else np.asarray(x0, float)
        L = int(np.ceil(np.abs(x0).max() + sigma * np.sqrt(2 * np.log(1 / amp_tol))))
        box = LatticeBox(d, L)
        X = box.coords()
        v = np.exp(-np.sum((X - x0) ** 2, axis=1) / (2 * sigma**2) + 2j * np.pi * X @ np.asarray(xi0, float))
        v /= np.linalg.norm(v)
        return cls(LatticeFunction(box, v.reshape(box.shape)), tuple(float(a) for a in xi0), float(radius))

    @property
    def d(self) -> int:
        return self.psi0.box.d

    def critical_distance(self) -> float:
        corners = np.array(np.meshgrid(*([[0.0, 0.5]] * self.d), indexing="ij")).reshape(self.d, -1).T
        return float(_torus_dist(corners, self.xi0).min() - self.radius)

    def mass_outside(self, pad: int = 4) -> float:
        """Fourier mass of ``psi0`` outside the declared window."""
        N = sfft.next_fast_len(pad * self.psi0.box.side)
        N += N % 2
        grid = DualGrid(self.d, N)
        fh = sfft.fftn(to_torus(self.psi0, grid))
        w = np.abs(fh) ** 2
        xi = np.stack(np.meshgrid(*([grid.nodes()] * self.d), indexing="ij"), axis=-1)
        out = _torus_dist(xi, self.xi0) > self.radius
        return float(w[out].sum() / w.sum())

    def energy_range(self):
        """Range of ``h0`` over the window (sampled)."""
        from .symbols import h0_eval

        g = np.linspace(-self.radius, self.radius, 41)
        pts = np.stack(np.meshgrid(*([g] * self.d), indexing="ij"), axis=-1).reshape(-1, self.d)
        pts = pts[np.linalg.norm(pts, axis=1) <= self.radius] + np.asarray(self.xi0)
        h = h0_eval(self.d, pts)
        return float(h.min()), float(h.max())


@dataclass
class WaveOperatorTrace:
    t_schedule: np.ndarray
    states: list
    increments: np.ndarray
    norms: np.ndarray
    meta: dict = field(default_factory=dict)


class TorusStack:
    """Free and perturbed propagators on one torus with certified tails."""

    def __init__(self, d: int, V: Potential, grid: DualGrid, tol: float = 1e-12):
        self.d, self.V, self.grid, self.tol = d, V, grid, tol
        self.H = hamiltonian(V.on_torus(grid.N) if V.size else None)
        a, b = gershgorin_interval(d, V)
        self.interval = (a - 1e-3, b + 1e-3)
        self.n_matvec = 0

    def free(self, u: np.ndarray, t: float) -> np.ndarray:
        return free_propagate_torus(u, t)

    def full(self, u: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return u
        spec = ChebyshevSpec.build(abs(t), self.interval, self.tol)
        self.n_matvec += spec.n_terms
        return chebyshev_propagate(self.H, u, t, spec)


def _stack_for(d, V, extent, tspan, margin, tol, grid=None):
    ext = max(extent, V.extent())
    grid = grid or grid_for(d, ext, tspan, margin)
    if grid.N // 2 - 1 < budget_half_width(ext, tspan, margin):
        raise BudgetError(f"torus N={grid.N} too small for extent {ext} and time span {tspan}")
    return TorusStack(d, V, grid, tol)


def _W(stack: TorusStack, u0: np.ndarray, t: float) -> np.ndarray:
    return stack.full(stack.free(u0, t), -t)


def wave_apply(d: int, V: Potential, packet: WavePacket, t_schedule, grid: DualGrid | None = None,
               tol: float = 1e-12, margin: int = DEFAULT_MARGIN) -> WaveOperatorTrace:
    """``W(t) psi0`` for each ``t`` in the schedule, read back on the torus box.

    The composite flow can travel ``2|t|`` out and ``2|t|`` back, so the
    torus is budgeted for a span of ``2 max|t|``.
    """
    ts = np.asarray(t_schedule, float)
    if np.any(np.diff(ts) <= 0):
        raise ConfigError("t_schedule must be increasing")
    ext = packet.psi0.box.L
    stack = _stack_for(d, V, ext, 2 * np.abs(ts).max(), margin, tol, grid)
    u0 = to_torus(packet.psi0, stack.grid)
    states = [_W(stack, u0, t) for t in ts]
    inc = np.array([np.linalg.norm(b - a) for a, b in zip(states[:-1], states[1:])])
    norms = np.array([np.linalg.norm(s) for s in states])
    return WaveOperatorTrace(ts, states, inc, norms, {"N": stack.grid.N, "tol": tol, "matvecs": stack.n_matvec})


def intertwining_check(d: int, V: Potential, packet: WavePacket, t: float, s: float,
                       grid: DualGrid | None = None, tol: float = 1e-12, margin: int = DEFAULT_MARGIN) -> float:
    """``|| exp(-isH) W(t) psi0 - W(t - s) exp(-isH0) psi0 ||``."""
    ext = packet.psi0.box.L
    span = 2 * max(abs(t), abs(t - s)) + abs(s)
    stack = _stack_for(d, V, ext, span, margin, tol, grid)
    u0 = to_torus(packet.psi0, stack.grid)
    lhs = stack.full(_W(stack, u0, t), s)
    rhs = _W(stack, stack.free(u0, s), t - s)
    return float(np.linalg.norm(lhs - rhs))


def random_local_state(d: int, R: int, rng: np.random.Generator) -> LatticeFunction:
    box = LatticeBox(d, R)
    v = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    return LatticeFunction(box, v / np.linalg.norm(v))


def completeness_diagnostic(d: int, V: Potential, phi: LatticeFunction, t_schedule, R: int,
                            remove_bound_states: bool = True, states=None, grid: DualGrid | None = None,
                            tol: float = 1e-12, margin: int = DEFAULT_MARGIN) -> dict:
    """Local mass ``||1_{|x| <= R} exp(-itH) phi_c||`` along ``t_schedule``.

    ``phi_c`` is ``phi`` with its components along the bound states of
    ``H`` removed (``states`` overrides the vectors used; pass an empty
    list to skip).  The bound-state vectors live on the torus box, so
    the mass they carry outside it is reported as ``truncated_mass``.
    ``time_average[j]`` is the trapezoid mean of the local mass over
    ``[t_0, t_j]``; ``t_schedule`` must start at 0 and increase.
    """
    ts = np.asarray(t_schedule, float)
    if ts[0] != 0 or np.any(np.diff(ts) <= 0):
        raise ConfigError("t_schedule must start at 0 and increase")
    stack = _stack_for(d, V, phi.box.L, ts[-1], margin, tol, grid)
    tbox = LatticeBox(d, stack.grid.N // 2 - 1)
    u = to_torus(phi, stack.grid)
    removed, truncated, energies = 0.0, 0.0, []
    if states is None and remove_bound_states:
        states = []
        for bs in bound_states(d, V):
            vecs, lost = bound_state_vectors(d, V, bs.energy, tbox)
            states += vecs
            truncated = max(truncated, max(lost))
            energies.append(bs.energy)
    for psi in states or []:
        w = to_torus(psi, stack.grid)
        c = np.vdot(w, u)
        u = u - c * w
        removed += abs(c) ** 2
    X = np.stack(np.meshgrid(*([np.fft.fftfreq(stack.grid.N, 1 / stack.grid.N)] * d), indexing="ij"), axis=-1)
    local = np.linalg.norm(X, axis=-1) <= R
    mass = [float(np.linalg.norm(u[local]))]
    for t0, t1 in zip(ts[:-1], ts[1:]):
        u = stack.full(u, t1 - t0)
        mass.append(float(np.linalg.norm(u[local])))
    mass = np.array(mass)
    avg = np.r_[mass[0], np.array([np.trapezoid(mass[: j + 1], ts[: j + 1]) / ts[j] for j in range(1, len(ts))])]
    return {"t": ts, "local_mass": mass, "time_average": avg, "removed_mass": removed,
            "truncated_mass": truncated, "bound_energies": energies, "N": stack.grid.N,
            "final_state": from_torus(u, tbox)}
