"""Study harnesses: regularization refinement, mesh/time refinement, manufactured solutions."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .grid_field import FLOAT_FMT, Grid, ScalarField, Trajectory, d1, norm_lp_time_lq_space
from .material import MaterialParams
from .order_parameter import RegularizationParams, semi_implicit_step, smoothed_abs_primitive
from .elasticity import solve_fd
from .diagnostics import max_principle_check, energy_monitor, weak_residual
from .simulator import RunResult, Simulation, SimulationConfig


class MismatchedGrids(ValueError):
    pass


def study_threads() -> int:
    env = os.environ.get("CONFSIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class StudyConfig:
    """A family of runs over a decreasing regularization sequence.

    With the default unit factors all members share the grid and time step
    (the setting in which reference distances are defined).  Factors above one
    refine the mesh and the step per member, turning the sequence into a
    simultaneous refinement path.
    """

    base: SimulationConfig
    kappas: tuple
    reference: int = -1
    h_factor: int = 1
    dt_factor: int = 1

    def __post_init__(self):
        ks = tuple(float(k) for k in self.kappas)
        if len(ks) < 2:
            raise ValueError("a study needs at least two kappa values")
        if any(not (0 < k <= 1) for k in ks):
            raise ValueError("kappa values must lie in (0, 1]")
        if any(b <= a for a, b in zip(ks[1:], ks[:-1])):
            raise ValueError("kappa values must be strictly decreasing")
        object.__setattr__(self, "kappas", ks)
        if self.h_factor < 1 or self.dt_factor < 1:
            raise ValueError("refinement factors must be >= 1")
        self.kappas[self.reference]  # raises IndexError for a bad reference

    @property
    def is_refinement(self) -> bool:
        return self.h_factor > 1 or self.dt_factor > 1

    def member_config(self, index: int) -> SimulationConfig:
        kappa = self.kappas[index]
        base = self.base
        reg = base.reg
        # a mollifier width equal to kappa is treated as coupled and swept along
        kappa_m = kappa if reg.kappa_m == reg.kappa else reg.kappa_m
        hf = self.h_factor**index
        tf = self.dt_factor**index
        grid = Grid(base.grid.a, base.grid.d, (base.grid.n - 1) * hf + 1)
        return replace(
            base,
            grid=grid,
            save_every=base.save_every * tf,
            reg=RegularizationParams(
                kappa=kappa,
                dt=reg.dt / tf,
                theta=reg.theta,
                kappa_m=kappa_m,
                increment_guard=reg.increment_guard,
            ),
        )


@dataclass
class StudyRow:
    kappa: float
    h: float
    dt: float
    d_kappa: float
    d_primitive: float
    max_principle_margin: float
    sup_energy: float
    weak_residual_max: float
    is_reference: bool


@dataclass
class StudyResult:
    rows: list[StudyRow]
    strictly_decreasing: bool


def _flux_fields(traj: Trajectory) -> list[ScalarField]:
    out = []
    for f in traj.s_frames:
        g = d1(f).values
        out.append(ScalarField(traj.grid, 0.5 * np.abs(g) * g))
    return out


def _primitive_fields(traj: Trajectory, kappa: float) -> list[ScalarField]:
    return [
        ScalarField(traj.grid, smoothed_abs_primitive(d1(f).values, kappa))
        for f in traj.s_frames
    ]


def flux_distance(traj_a: Trajectory, traj_b: Trajectory) -> float:
    """L^{4/3}-in-time, L^2-in-space distance of the signed flux |S_x|S_x/2."""
    if traj_a.grid != traj_b.grid or len(traj_a.times) != len(traj_b.times):
        raise MismatchedGrids("study members must share grid and save schedule")
    fa = _flux_fields(traj_a)
    fb = _flux_fields(traj_b)
    diff = [ScalarField(traj_a.grid, x.values - y.values) for x, y in zip(fa, fb)]
    return norm_lp_time_lq_space(traj_a.times, diff, 4.0 / 3.0, 2.0)


def run_study(study: StudyConfig) -> StudyResult:
    """Run every member, then measure each member's flux distance to the reference.

    Members execute concurrently (bounded by CONFSIM_THREADS); aggregation is a
    deterministic reduction over the completed results.  Reference distances
    need a shared grid and save schedule, so refinement factors are rejected.
    """
    if study.is_refinement:
        raise MismatchedGrids("reference distances need unit refinement factors")
    configs = [study.member_config(i) for i in range(len(study.kappas))]
    with ThreadPoolExecutor(max_workers=study_threads()) as pool:
        results: list[RunResult] = list(pool.map(lambda c: Simulation(c).run(), configs))

    ref_idx = study.reference % len(study.kappas)
    ref_traj = results[ref_idx].trajectory
    ref_flux = _flux_fields(ref_traj)

    rows = []
    for i, (kappa, res) in enumerate(zip(study.kappas, results)):
        traj = res.trajectory
        if traj.grid != ref_traj.grid or len(traj.times) != len(ref_traj.times):
            raise MismatchedGrids("study members must share grid and save schedule")
        d_kappa = flux_distance(traj, ref_traj)
        prim = _primitive_fields(traj, kappa)
        diff = [ScalarField(traj.grid, p.values - w.values) for p, w in zip(prim, ref_flux)]
        d_prim = norm_lp_time_lq_space(traj.times, diff, 4.0 / 3.0, 2.0)
        margin, _ = max_principle_check(traj)
        energy = energy_monitor(traj, kappa)
        rows.append(
            StudyRow(
                kappa=kappa,
                h=traj.grid.h,
                dt=res.config.reg.dt,
                d_kappa=d_kappa,
                d_primitive=d_prim,
                max_principle_margin=margin,
                sup_energy=energy.sup_grad,
                weak_residual_max=float(np.max(np.abs(weak_residual(traj, res.config.material)))),
                is_reference=(i == ref_idx),
            )
        )

    distances = [r.d_kappa for r in rows if not r.is_reference]
    decreasing = all(b < a for a, b in zip(distances, distances[1:]))
    return StudyResult(rows, decreasing)


def write_study_csv(path, result: StudyResult):
    lines = ["kappa,h,dt,D_kappa,max_principle_margin,sup_energy,weak_residual_max"]
    for r in result.rows:
        lines.append(
            ",".join(
                FLOAT_FMT.format(v)
                for v in (
                    r.kappa,
                    r.h,
                    r.dt,
                    r.d_kappa,
                    r.max_principle_margin,
                    r.sup_energy,
                    r.weak_residual_max,
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def halving_study(base: SimulationConfig, levels: int) -> StudyConfig:
    """Simultaneous (h, dt, kappa)-halving path starting from ``base``."""
    kappas = tuple(base.reg.kappa / 2**j for j in range(levels))
    return StudyConfig(base=base, kappas=kappas, h_factor=2, dt_factor=2)


def run_refinement(study: StudyConfig) -> list[RunResult]:
    configs = [study.member_config(i) for i in range(len(study.kappas))]
    with ThreadPoolExecutor(max_workers=study_threads()) as pool:
        return list(pool.map(lambda c: Simulation(c).run(), configs))


def weak_residual_refinement(base: SimulationConfig, levels: int = 3) -> list[float]:
    results = run_refinement(halving_study(base, levels))
    return [
        float(np.max(np.abs(weak_residual(r.trajectory, r.config.material)))) for r in results
    ]


# --- manufactured solutions --------------------------------------------------


def manufactured_elasticity_case(a: float, d: float, quadratic: bool = False):
    """Exact displacement and matching right-hand side for the radial solve.

    The sine profile exercises the truncation error; the quadratic profile is
    reproduced exactly by the second-order stencils and serves as the
    degenerate exactness case.
    """
    if quadratic:
        def u_star(x):
            return (x - a) * (d - x)

        def g_star(x):
            up = (a + d) - 2.0 * x
            return -2.0 + 2.0 * up / x - 2.0 * u_star(x) / x**2

    else:
        k = math.pi / (d - a)

        def u_star(x):
            return np.sin(k * (x - a))

        def g_star(x):
            return -(k**2) * np.sin(k * (x - a)) + 2.0 * k * np.cos(k * (x - a)) / x - 2.0 * np.sin(
                k * (x - a)
            ) / x**2

    return u_star, g_star


def elasticity_errors(a: float, d: float, grid_sizes: Sequence[int], quadratic: bool = False):
    u_star, g_star = manufactured_elasticity_case(a, d, quadratic)
    errors = []
    for n in grid_sizes:
        grid = Grid(a, d, n)
        rhs = ScalarField.from_function(grid, g_star)
        u = solve_fd(rhs)
        errors.append(float(np.max(np.abs(u.values - u_star(grid.x)))))
    return errors


def fit_slope(hs: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    lh = np.log(np.asarray(hs, dtype=float))
    le = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(lh, le, 1)[0])


def _explicit_reference(
    s0: ScalarField, material: MaterialParams, kappa: float, t_end: float, dt: float
) -> ScalarField:
    """Forward-Euler integration of the force-free evolution, used as an oracle."""
    grid = s0.grid
    h = grid.h
    v = s0.values.copy()
    n_steps = int(round(t_end / dt))
    for _ in range(n_steps):
        s_x = np.empty_like(v)
        s_x[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        s_x[0] = s_x[-1] = 0.0
        coef = material.c * material.nu * np.hypot(s_x, kappa)
        lap = np.zeros_like(v)
        lap[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
        v = v + dt * coef * lap
        v[0] = v[-1] = 0.0
    return ScalarField(grid, v)


def _implicit_forcefree(
    s0: ScalarField, material: MaterialParams, kappa: float, t_end: float, dt: float
) -> ScalarField:
    reg = RegularizationParams(kappa=kappa, dt=dt, theta=1.0, increment_guard=1e9)
    zero = ScalarField.zeros(s0.grid)
    s = s0
    for _ in range(int(round(t_end / dt))):
        s = semi_implicit_step(s, zero, material, reg)
    return s


@dataclass
class MMSResult:
    elasticity_slope: float
    elasticity_errors: list[float]
    quadratic_exact: bool
    quadratic_error: float
    dt_slope: float
    dt_errors: list[float]
    h_slope: float
    h_errors: list[float]


def mms_convergence(
    a: float = 1.0,
    d: float = 2.0,
    material: Optional[MaterialParams] = None,
    kappa: float = 0.25,
) -> MMSResult:
    """Observed convergence orders from three-level refinements.

    Covers the elasticity solve against closed-form displacements (order 2,
    plus the machine-exact quadratic case) and the force-free parabolic step:
    rate in dt against a tiny-step forward-Euler reference at fixed h, and
    rate in h on nested grids with dt tied to h^2.
    """
    if material is None:
        material = MaterialParams(c=1.0, nu=0.1, mu=2.0, lam=0.2, e=0.06, well_weight=1.0)

    sizes = [65, 129, 257]
    errs = elasticity_errors(a, d, sizes, quadratic=False)
    hs = [(d - a) / (n - 1) for n in sizes]
    slope = fit_slope(hs, errs)
    quad_err = elasticity_errors(a, d, [129], quadratic=True)[0]

    # rate in dt at fixed grid; the forward-Euler reference is Richardson
    # extrapolated so its own O(dt_ref) bias stays below the measured errors
    grid = Grid(a, d, 65)
    s0 = ScalarField(grid, 0.5 * np.sin(math.pi * (grid.x - a) / (d - a)))
    s0.values[0] = s0.values[-1] = 0.0
    t_end = 2.0e-3
    dts = [4.0e-4, 2.0e-4, 1.0e-4]
    dt_ref = dts[-1] / 256.0
    ref_coarse = _explicit_reference(s0, material, kappa, t_end, dt_ref)
    ref_fine = _explicit_reference(s0, material, kappa, t_end, dt_ref / 2.0)
    ref = ScalarField(grid, 2.0 * ref_fine.values - ref_coarse.values)
    dt_errors = [
        float(np.max(np.abs(_implicit_forcefree(s0, material, kappa, t_end, dt).values - ref.values)))
        for dt in dts
    ]
    dt_slope = fit_slope(dts, dt_errors)

    # rate in h on nested grids, dt tied to h^2, compared on shared nodes
    base_n = 17
    levels = [0, 1, 2]
    ref_level = 4
    t_end_h = 4.0e-3

    def run_level(level: int):
        n = (base_n - 1) * 2**level + 1
        g = Grid(a, d, n)
        s = ScalarField(g, 0.5 * np.sin(math.pi * (g.x - a) / (d - a)))
        s.values[0] = s.values[-1] = 0.0
        dt = 1.0e-3 / 4.0**level
        return _implicit_forcefree(s, material, kappa, t_end_h, dt)

    fine = run_level(ref_level)
    h_errors = []
    h_list = []
    for level in levels:
        coarse = run_level(level)
        stride = 2 ** (ref_level - level)
        h_errors.append(float(np.max(np.abs(coarse.values - fine.values[::stride]))))
        h_list.append(coarse.grid.h)
    h_slope = fit_slope(h_list, h_errors)

    return MMSResult(
        elasticity_slope=slope,
        elasticity_errors=errs,
        quadratic_exact=quad_err < 1e-11,
        quadratic_error=quad_err,
        dt_slope=dt_slope,
        dt_errors=dt_errors,
        h_slope=h_slope,
        h_errors=h_errors,
    )
