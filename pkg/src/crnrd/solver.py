"""IMEX finite-volume solver for the Neumann reaction-diffusion system.

Each step takes an explicit Euler step of the reaction terms and then an
implicit Euler step of the diffusion, using the cell-centred ghost-cell
Laplacian (one tridiagonal solve per line; x then y sweeps on rectangles).
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .equilibria import certify_equilibrium
from .errors import ConfigError, GridTooCoarse, NegativeConcentration, NonFiniteState, NotComplexBalanced
from .network import ReactionNetwork, reaction_rhs, rhs_jacobian
from .parser import load_network
from .spectral import Domain
from .stoich import StoichData, analyze_stoichiometry
from .tridiag import NeumannImplicit

log = logging.getLogger(__name__)

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    lengths: tuple[float, ...]
    cells: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    def coords(self) -> list[np.ndarray]:
        """Cell centres ``(k + 1/2) dx`` along each axis."""
        return [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.dx)]


def build_grid(domain: Domain, n) -> Grid:
    cells = tuple(int(c) for c in np.broadcast_to(np.atleast_1d(n), (domain.dim,)))
    if any(c < MIN_CELLS for c in cells):
        raise GridTooCoarse(f"need at least {MIN_CELLS} cells per axis, got {cells}")
    if domain.dim > 2:
        raise ConfigError("simulation supports 1D and 2D domains only")
    return Grid(domain.lengths, cells)


@dataclass
class Field:
    """Concentrations, shape (N, *grid.shape), at time ``t``."""

    u: np.ndarray
    t: float = 0.0
    clamps: int = 0


def _chunks(n: int, parts: int) -> list[slice]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


class Stepper:
    """Holds the factored diffusion solves for one (grid, d, dt) combination."""

    def __init__(self, net: ReactionNetwork, grid: Grid, d, dt: float, threads: int = 1):
        if not dt > 0:
            raise ConfigError("dt must be positive")
        self.net = net
        self.grid = grid
        self.d = np.asarray(d, dtype=float)
        self.dt = float(dt)
        self.threads = max(1, int(threads))
        N = net.n_species
        if grid.dim == 1:
            (n,), (h,) = grid.cells, grid.dx
            self.solvers = [NeumannImplicit(n, self.dt * self.d / h**2)]
        else:
            (nx, ny), (hx, hy) = grid.cells, grid.dx
            # one factorization per species and axis; columns are grid lines
            self.solvers = [
                (
                    NeumannImplicit(nx, np.full(ny, self.dt * self.d[i] / hx**2)),
                    NeumannImplicit(ny, np.full(nx, self.dt * self.d[i] / hy**2)),
                )
                for i in range(N)
            ]
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))

    def reaction(self, u: np.ndarray) -> np.ndarray:
        flat = u.reshape(u.shape[0], -1)
        out = np.empty_like(flat)

        def work(sl):
            out[:, sl] = flat[:, sl] + self.dt * reaction_rhs(self.net, flat[:, sl])

        self._map(work, _chunks(flat.shape[1], self.threads))
        return out.reshape(u.shape)

    def diffusion(self, u: np.ndarray) -> np.ndarray:
        N = u.shape[0]
        if self.grid.dim == 1:
            rhs = np.ascontiguousarray(u.T)
            out = np.empty_like(rhs)
            solver = self.solvers[0]

            def work(sl):
                out[:, sl] = solver.solve(rhs[:, sl], sl)

            self._map(work, _chunks(N, self.threads))
            return np.ascontiguousarray(out.T)

        new = np.empty_like(u)

        def work2d(i):
            sx, sy = self.solvers[i]
            half = sx.solve(u[i])  # (nx, ny): columns are lines along x
            new[i] = sy.solve(np.ascontiguousarray(half.T)).T

        self._map(work2d, range(N))
        return new

    def step(self, fld: Field, clamp: bool = True) -> Field:
        ustar = self.reaction(fld.u)
        if not np.all(np.isfinite(ustar)):
            raise NonFiniteState(
                f"non-finite state at t={fld.t:.6g}",
                {"t": fld.t, "max_u": float(np.nanmax(np.abs(fld.u)))},
            )
        unew = self.diffusion(ustar)
        neg = unew < 0
        clamps = fld.clamps
        if neg.any():
            if not clamp:
                raise NegativeConcentration(f"negative concentration at t={fld.t + self.dt:.6g}")
            clamps += int(neg.sum())
            unew[neg] = 0.0
        return Field(unew, fld.t + self.dt, clamps)


def imex_step(net: ReactionNetwork, grid: Grid, d, fld: Field, dt: float, clamp: bool = True) -> Field:
    """One IMEX Euler step; negative entries are set to zero and counted."""
    return Stepper(net, grid, d, dt).step(fld, clamp=clamp)


# --- configuration -----------------------------------------------------------


@dataclass
class Mode:
    """A perturbation shape ``weights_i * amplitude * phi(x)``.

    ``kind="cosine"`` uses the Neumann eigenfunction with the given index
    (one index per axis; 0 is the constant mode). ``kind="random"`` draws
    an independent zero-mean field per species from the config seed.
    """

    weights: tuple[float, ...]
    index: tuple[int, ...] = (0,)
    amplitude: float = 1.0
    kind: str = "cosine"

    @classmethod
    def from_dict(cls, d: dict) -> "Mode":
        idx = d.get("index", 0)
        return cls(
            weights=tuple(float(x) for x in d["weights"]),
            index=tuple(int(x) for x in np.atleast_1d(idx)),
            amplitude=float(d.get("amplitude", 1.0)),
            kind=d.get("kind", "cosine"),
        )

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "index": list(self.index),
            "amplitude": self.amplitude,
            "kind": self.kind,
        }


@dataclass
class SimConfig:
    """Inputs of one simulation run.

    ``epsilon`` is the size of the initial perturbation measured as
    ``sum_i ||u_i0 - u_i,inf||_L2``; the modes only fix its shape.
    ``mass`` selects the equilibrium (defaults to the reference one).
    """

    network: str
    diffusion: tuple[float, ...]
    lengths: tuple[float, ...] = (1.0,)
    cells: tuple[int, ...] = (200,)
    epsilon: float = 1e-3
    modes: list[Mode] = field(default_factory=list)
    t_end: float = 2.0
    dt: float = 1e-3
    stride: int = 10
    clamp: bool = True
    mass: tuple[float, ...] | None = None
    seed: int = 0
    fit_window: tuple[float, float] = (0.2, 0.9)
    envelope: bool = False
    name: str = ""

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError("epsilon must be nonnegative")
        if not self.dt > 0 or not self.t_end > 0:
            raise ConfigError("dt and t_end must be positive")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        a, b = self.fit_window
        if not 0 <= a < b <= 1:
            raise ConfigError("fit_window must satisfy 0 <= a < b <= 1")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike | None = None) -> "SimConfig":
        d = dict(d)
        try:
            grid = d.pop("grid", {})
            init = d.pop("initial", {})
            net = d.pop("network")
            if base_dir is not None and not os.path.isabs(net):
                net = str(Path(base_dir) / net)
            lengths = tuple(float(x) for x in np.atleast_1d(grid.get("lengths", 1.0)))
            cells = tuple(int(x) for x in np.broadcast_to(np.atleast_1d(grid.get("cells", 200)), (len(lengths),)))
            mass = d.pop("mass", None)
            fw = d.pop("fit_window", (0.2, 0.9))
            known = {"diffusion", "t_end", "dt", "stride", "clamp", "seed", "envelope", "name"}
            extra = set(d) - known
            if extra:
                raise ConfigError(f"unknown config keys {sorted(extra)}")
            return cls(
                network=net,
                diffusion=tuple(float(x) for x in d.pop("diffusion")),
                lengths=lengths,
                cells=cells,
                epsilon=float(init.get("epsilon", 0.0)),
                modes=[Mode.from_dict(m) for m in init.get("modes", [])],
                mass=None if mass is None else tuple(float(x) for x in mass),
                fit_window=(float(fw[0]), float(fw[1])),
                **d,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid simulation config: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "SimConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "network": self.network,
            "diffusion": list(self.diffusion),
            "grid": {"lengths": list(self.lengths), "cells": list(self.cells)},
            "initial": {"epsilon": self.epsilon, "modes": [m.to_dict() for m in self.modes]},
            "mass": None if self.mass is None else list(self.mass),
            "t_end": self.t_end,
            "dt": self.dt,
            "stride": self.stride,
            "clamp": self.clamp,
            "seed": self.seed,
            "fit_window": list(self.fit_window),
            "envelope": self.envelope,
        }


def initial_field(config: SimConfig, grid: Grid, u_inf: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """``u_inf + epsilon * S / sum_i ||S_i||_L2`` for the summed mode shape S."""
    N = u_inf.size
    S = np.zeros((N,) + grid.shape)
    rng = np.random.default_rng(config.seed)
    coords = np.meshgrid(*grid.coords(), indexing="ij")
    for mode in config.modes:
        a = np.asarray(mode.weights, dtype=float)
        if a.shape != (N,):
            raise ConfigError(f"mode weights need {N} entries")
        if mode.kind == "cosine":
            idx = np.broadcast_to(np.asarray(mode.index), (grid.dim,))
            if np.any(idx < 0):
                raise ConfigError("cosine indices must be >= 0")
            if np.all(idx == 0) and Q.shape[0] and np.max(np.abs(Q @ a)) > 1e-12 * (1 + np.max(np.abs(a))):
                raise ConfigError("a constant mode must satisfy Q a = 0 to keep the conserved masses")
            phi = np.ones(grid.shape)
            for j, x, L in zip(idx, coords, grid.lengths):
                phi = phi * np.cos(j * math.pi * x / L)
            S += mode.amplitude * a.reshape((N,) + (1,) * grid.dim) * phi
        elif mode.kind == "random":
            noise = rng.standard_normal((N,) + grid.shape)
            noise -= noise.reshape(N, -1).mean(axis=1).reshape((N,) + (1,) * grid.dim)
            S += mode.amplitude * a.reshape((N,) + (1,) * grid.dim) * noise
        else:
            raise ConfigError(f"unknown mode kind {mode.kind!r}")
    size = float(np.sum(np.sqrt(grid.cell_volume * np.sum(S.reshape(N, -1) ** 2, axis=1))))
    u0 = np.broadcast_to(u_inf.reshape((N,) + (1,) * grid.dim), S.shape).copy()
    if config.epsilon > 0 and size > 0:
        u0 += config.epsilon * S / size
    if np.any(u0 < 0):
        raise ConfigError("initial data is negative somewhere; reduce epsilon")
    return u0


# --- results -----------------------------------------------------------------


@dataclass
class SimResult:
    t: np.ndarray
    l2w_sq: np.ndarray
    linf: np.ndarray
    masses: np.ndarray  # (rows, m)
    min_u: np.ndarray
    clamps: np.ndarray
    final: Field
    u_inf: np.ndarray
    lp_dist: np.ndarray | None = None
    dt_heuristic_ok: bool = True

    @property
    def conservation_drift(self) -> float:
        if self.masses.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(self.masses - self.masses[0])))

    @property
    def total_clamps(self) -> int:
        return int(self.clamps[-1])

    @property
    def warn(self) -> bool:
        return self.total_clamps > 0

    def csv_text(self) -> str:
        m = self.masses.shape[1]
        header = ["t", "l2w_sq", "linf"] + [f"mass_{j + 1}" for j in range(m)] + ["min_u", "clamps"]
        lines = [",".join(header)]
        for r in range(self.t.size):
            vals = [self.t[r], self.l2w_sq[r], self.linf[r], *self.masses[r], self.min_u[r]]
            lines.append(",".join(repr(float(v)) for v in vals) + f",{int(self.clamps[r])}")
        return "\n".join(lines) + "\n"

    def gnuplot_text(self) -> str:
        lines = ["# t log(l2w_sq)"]
        for t, y in zip(self.t, self.l2w_sq):
            lines.append(f"{float(t)!r} {math.log(y)!r}" if y > 0 else f"{float(t)!r} nan")
        return "\n".join(lines) + "\n"


def _record(u, u_inf, grid, Q, lp):
    N = u.shape[0]
    v = (u - u_inf.reshape((N,) + (1,) * grid.dim)).reshape(N, -1)
    l2w = float(np.sum(grid.cell_volume * np.sum(v * v, axis=1) / u_inf))
    linf = float(np.max(np.abs(v)))
    means = u.reshape(N, -1).mean(axis=1)
    lp_val = None
    if lp is not None:
        lp_val = float(np.sum((grid.cell_volume * np.sum(np.abs(v) ** lp, axis=1)) ** (1.0 / lp)))
    return l2w, linf, Q @ means, float(u.min()), lp_val


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("CRNRD_THREADS", "1")))
    except ValueError:
        return 1


def simulate(
    config: SimConfig,
    net: ReactionNetwork | None = None,
    stoich: StoichData | None = None,
    threads: int | None = None,
    lp_exponent: float | None = None,
    tol_cb: float = 1e-8,
) -> SimResult:
    """Run the configured perturbation of u_inf to ``t_end``.

    Rows are recorded every ``stride`` steps, including t = 0. With
    ``lp_exponent`` the summed L^p distance is recorded as well.
    """
    net = net if net is not None else load_network(config.network)
    stoich = stoich or analyze_stoichiometry(net)
    if len(config.diffusion) != net.n_species:
        raise ConfigError(f"need {net.n_species} diffusion coefficients")
    grid = build_grid(Domain(config.lengths), config.cells)
    cert = certify_equilibrium(net, stoich, mass=config.mass, tol_cb=tol_cb)
    if not cert.complex_balanced:
        raise NotComplexBalanced(cert.detail.get("reason", "network is not complex balanced"), cert.log_residual)
    u_inf = cert.u_inf
    Q = stoich.Q

    L = rhs_jacobian(net, u_inf)
    norm_L = float(np.max(np.sum(np.abs(L), axis=1)))
    dt_ok = config.dt <= 0.2 / norm_L if norm_L > 0 else True
    if not dt_ok:
        log.warning("dt=%g exceeds the stability heuristic 0.2/||L||_inf = %g", config.dt, 0.2 / norm_L)

    fld = Field(initial_field(config, grid, u_inf, Q))
    stepper = Stepper(net, grid, config.diffusion, config.dt, threads or default_threads())
    rows = []
    try:
        rows.append((0.0, *_record(fld.u, u_inf, grid, Q, lp_exponent), 0))
        for step in range(1, config.n_steps + 1):
            fld = stepper.step(fld, clamp=config.clamp)
            if step % config.stride == 0:
                t = step * config.dt
                rows.append((t, *_record(fld.u, u_inf, grid, Q, lp_exponent), fld.clamps))
    finally:
        stepper.close()
    fld.t = config.n_steps * config.dt
    m = Q.shape[0]
    return SimResult(
        t=np.array([r[0] for r in rows]),
        l2w_sq=np.array([r[1] for r in rows]),
        linf=np.array([r[2] for r in rows]),
        masses=np.array([r[3] for r in rows]).reshape(len(rows), m),
        min_u=np.array([r[4] for r in rows]),
        clamps=np.array([r[6] for r in rows], dtype=int),
        final=fld,
        u_inf=u_inf,
        lp_dist=None if lp_exponent is None else np.array([r[5] for r in rows]),
        dt_heuristic_ok=dt_ok,
    )
