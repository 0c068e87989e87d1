"""Finite-volume time integration of the two fast-diffusion flows.

Two flows are integrated on the radial grid: the plain fast diffusion
equation dv/dt = Lap(v^m) at the conformal exponent m = (d-2)/(d+2) (run
until extinction), and the same equation written in self-similar variables,
dv/dt = div(v grad(v^{m-1} - r^2)), whose stationary state is the profile
B = (1+r^2)^{1/(m-1)}.  Both schemes are flux-form finite volume with
node-centered cells, so the discrete mass is conserved exactly (self-similar
flow) or changes only through the outer radiation flux (plain flow).

Time stepping is semi-implicit backward Euler: the nonlinearity v^{m-1}
(resp. v^m) is linearized about the previous sweep iterate and the resulting
tridiagonal systems are re-solved for a fixed number of sweeps.  Steps that
produce nonpositive cells are rejected and retried with a halved dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import functionals
from .profiles import _golden_min
from .radial import RadialGrid, RadialProfile, lp_norm, pair_integral


class PositivityError(RuntimeError):
    """A time step kept producing nonpositive cells after 20 halvings."""


class ExtinctionNotReached(RuntimeError):
    """Terminal-profile diagnostics need a run that ended by extinction."""


@dataclass(frozen=True)
class FlowConfig:
    m: float
    dt: float
    t_end: float
    sweeps: int = 5
    record_every: int = 10
    max_rejections: int = 20

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.sweeps < 1 or self.record_every < 1:
            raise ValueError("sweeps and record_every must be >= 1")


@dataclass
class FlowTrace:
    """Diagnostics recorded along a run; columns depend on the flow."""

    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    free_energy: list = field(default_factory=list)
    fisher: list = field(default_factory=list)
    quotient: list = field(default_factory=list)
    h_functional: list = field(default_factory=list)
    j_functional: list = field(default_factory=list)
    extinction_time: float | None = None
    final_state: RadialProfile | None = None

    def to_csv(self, path) -> None:
        columns = [("t", self.times), ("mass", self.mass),
                   ("F", self.free_energy), ("I", self.fisher),
                   ("Q", self.quotient), ("H", self.h_functional),
                   ("J", self.j_functional)]
        columns = [(name, vals) for name, vals in columns if vals]
        with open(path, "w") as fh:
            fh.write(",".join(name for name, _ in columns) + "\n")
            for i in range(len(self.times)):
                fh.write(",".join(repr(vals[i]) for _, vals in columns)
                         + "\n")


def _cell_volumes(grid: RadialGrid) -> np.ndarray:
    """Exact volumes of the node-centered cells (faces at midpoints)."""
    r = grid.nodes
    faces = np.concatenate(([0.0], 0.5 * (r[:-1] + r[1:]), [r[-1]]))
    return grid.surface_factor * np.diff(faces ** grid.d) / grid.d


def _face_geometry(grid: RadialGrid):
    r = grid.nodes
    r_f = 0.5 * (r[:-1] + r[1:])
    s_f = grid.surface_factor * r_f ** (grid.d - 1)
    return r_f, s_f, np.diff(r)


def _solve_rows(lower, diag, upper, rhs):
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


class _SelfSimilarStep:
    """One semi-implicit step of dv/dt = div(v grad(v^{m-1} - r^2))."""

    def __init__(self, grid: RadialGrid, m: float):
        m_c = (grid.d - 2.0) / grid.d
        if not m_c < m < 1.0:
            raise ValueError(f"m={m} outside the mass-conserving range "
                             f"({m_c}, 1)")
        self.m = m
        self.vol = _cell_volumes(grid)
        _, self.s_f, self.h = _face_geometry(grid)
        self.r2 = grid.nodes ** 2

    def __call__(self, v_old: np.ndarray, dt: float, sweeps: int) -> np.ndarray:
        m = self.m
        vk = v_old
        for _ in range(sweeps):
            c = (m - 1.0) * vk ** (m - 2.0)
            const = vk ** (m - 1.0) - c * vk - self.r2
            g = self.s_f * 0.5 * (vk[:-1] + vk[1:]) / self.h
            gc_lo = g * c[:-1]     # face j couples to node j ...
            gc_hi = g * c[1:]      # ... and node j+1
            dconst = g * np.diff(const)
            diag = self.vol / dt
            diag[:-1] -= gc_lo
            diag[1:] -= gc_hi
            lower = gc_lo[:]       # row i+1, column i
            upper = gc_hi[:]       # row i, column i+1
            rhs = self.vol / dt * v_old
            rhs[:-1] -= dconst
            rhs[1:] += dconst
            vk = _solve_rows(lower, diag, upper, rhs)
            if not np.all(np.isfinite(vk)) or np.any(vk <= 0):
                return vk          # caller rejects the step
        return vk


class _PlainStep:
    """One semi-implicit step of dv/dt = Lap(v^m), radiation outer boundary.

    The outer condition is d(v^m)/dr = -(d-2) v^m / r at R_max, exact for the
    r^{-(d-2)} far field of the separating-variables solution.
    """

    def __init__(self, grid: RadialGrid, m: float):
        if grid.d < 3:
            raise ValueError("the conformal-exponent flow needs d >= 3")
        self.m = m
        self.d = grid.d
        self.vol = _cell_volumes(grid)
        _, self.s_f, self.h = _face_geometry(grid)
        self.bc = grid.surface_factor * grid.r_max ** (grid.d - 1) \
            * (grid.d - 2.0) / grid.r_max

    def __call__(self, v_old: np.ndarray, dt: float, sweeps: int) -> np.ndarray:
        m = self.m
        vk = v_old
        for _ in range(sweeps):
            c = m * vk ** (m - 1.0)
            const = vk ** m - c * vk
            a = self.s_f / self.h
            ac_lo = a * c[:-1]
            ac_hi = a * c[1:]
            dconst = a * np.diff(const)
            diag = self.vol / dt
            diag[:-1] += ac_lo
            diag[1:] += ac_hi
            lower = -ac_lo
            upper = -ac_hi
            rhs = self.vol / dt * v_old
            rhs[:-1] += dconst
            rhs[1:] -= dconst
            diag[-1] += self.bc * c[-1]
            rhs[-1] -= self.bc * const[-1]
            vk = _solve_rows(lower, diag, upper, rhs)
            if not np.all(np.isfinite(vk)) or np.any(vk <= 0):
                return vk          # caller rejects the step
        return vk


def _advance(step, v, t, dt, cfg):
    """Advance one nominal dt with rejection/halving on positivity loss."""
    remaining = dt
    rejections = 0
    while remaining > 0:
        sub = min(dt / 2 ** rejections, remaining)
        v_new = step(v, sub, cfg.sweeps)
        if np.all(np.isfinite(v_new)) and np.all(v_new > 0):
            v, t = v_new, t + sub
            remaining -= sub
        else:
            rejections += 1
            if rejections > cfg.max_rejections:
                raise PositivityError(
                    f"positivity lost at t={t:.6g} after "
                    f"{cfg.max_rejections} halvings")
    return v, t


def run_rfd(v0: RadialProfile, cfg: FlowConfig) -> FlowTrace:
    """Integrate the self-similar flow, recording entropy diagnostics.

    The initial datum must carry the stationary profile's mass (checked by
    the entropy functionals on the first record); the scheme itself conserves
    the discrete mass exactly.
    """
    grid = v0.grid
    step = _SelfSimilarStep(grid, cfg.m)
    vol = _cell_volumes(grid)
    trace = FlowTrace()
    v = np.array(v0.values)
    if np.any(v < 0):
        raise ValueError("initial datum must be nonnegative")
    v = np.maximum(v, 1e-300)
    t = 0.0

    def record():
        prof = RadialProfile(grid, v, v0.decay_exponent)
        pair = functionals.entropy_pair(prof, cfg.m,
                                        check_mass=not trace.times)
        trace.times.append(t)
        trace.mass.append(float(vol @ v))
        trace.free_energy.append(pair.free_energy)
        trace.fisher.append(pair.fisher)
        trace.quotient.append(pair.quotient)

    record()
    n_steps = int(round(cfg.t_end / cfg.dt))
    for k in range(n_steps):
        v, t = _advance(step, v, t, cfg.dt, cfg)
        if (k + 1) % cfg.record_every == 0 or k == n_steps - 1:
            record()
    trace.final_state = RadialProfile(grid, v, v0.decay_exponent)
    return trace


def run_yamabe(v0: RadialProfile, cfg: FlowConfig) -> FlowTrace:
    """Integrate dv/dt = Lap(v^m) at m = (d-2)/(d+2) until t_end or extinction.

    Records the dual-deficit functional H (nonpositive, nondecreasing) and
    J = int v^{2d/(d+2)}.  Extinction is declared when max v drops below
    1e-8 of its initial value.
    """
    grid = v0.grid
    d = grid.d
    m_conf = (d - 2.0) / (d + 2.0)
    if abs(cfg.m - m_conf) > 1e-12:
        raise ValueError(f"this flow runs at the conformal exponent "
                         f"m=(d-2)/(d+2)={m_conf}, got m={cfg.m}")
    step = _PlainStep(grid, cfg.m)
    vol = _cell_volumes(grid)
    s_d = functionals.sharp_constants(d, grid=grid)["S_d"]
    q = 2.0 * d / (d + 2.0)
    trace = FlowTrace()
    v = np.array(v0.values)
    if np.any(v <= 0):
        raise ValueError("initial datum must be positive")
    v_peak0 = float(np.max(v))
    t = 0.0

    def record():
        prof = RadialProfile(grid, v, v0.decay_exponent)
        u = functionals.inverse_laplacian_radial(prof)
        h = s_d * pair_integral(prof, u) - lp_norm(prof, q) ** 2
        trace.times.append(t)
        trace.mass.append(float(vol @ v))
        trace.h_functional.append(h)
        trace.j_functional.append(lp_norm(prof, q) ** q)

    record()
    n_steps = int(round(cfg.t_end / cfg.dt))
    for k in range(n_steps):
        try:
            v, t = _advance(step, v, t, cfg.dt, cfg)
        except PositivityError:
            # Near extinction the amplitude collapses faster than any
            # admissible step; an unrecoverable positivity loss at tiny
            # amplitude is the extinction event itself.
            if float(np.max(v)) < 1e-4 * v_peak0:
                trace.extinction_time = t
                break
            raise
        if float(np.max(v)) < 1e-8 * v_peak0:
            trace.extinction_time = t
            break
        if (k + 1) % cfg.record_every == 0 or k == n_steps - 1:
            record()
    trace.final_state = RadialProfile(grid, v, v0.decay_exponent)
    return trace


def fit_decay_rate(trace: FlowTrace, window: tuple[float, float]) -> float:
    """Least-squares slope of -log F (or -log(-H)) over the time window."""
    times = np.asarray(trace.times)
    series = trace.free_energy if trace.free_energy else \
        [-h for h in trace.h_functional]
    series = np.asarray(series, dtype=float)
    sel = (times >= window[0]) & (times <= window[1]) & (series > 0)
    if np.count_nonzero(sel) < 5:
        raise ValueError(f"window {window} holds fewer than 5 positive "
                         "samples")
    slope = np.polyfit(times[sel], -np.log(series[sel]), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class RateConstants:
    eta: float
    chi: float
    zeta: float
    t_star: float


def rate_constants(d: int, m: float, t_star: float) -> RateConstants:
    """eta = 2(dm-d+1), chi = m/(266+56m), and the backward-propagated gap zeta."""
    eta = 2.0 * (d * m - d + 1.0)
    if eta <= 0:
        raise ValueError(f"eta={eta} <= 0: no improved rate for (d={d}, "
                         f"m={m})")
    if t_star < 0:
        raise ValueError("t_star must be nonnegative")
    chi = m / (266.0 + 56.0 * m)
    e = math.exp(-4.0 * t_star)
    zeta = 4.0 * eta * e / (4.0 + eta - eta * e)
    return RateConstants(eta, chi, zeta, t_star)


def backward_quotient_check(trace: FlowTrace, eta: float, t_star: float,
                         tol: float = 1e-2) -> dict:
    """Propagate a quotient bound at t_star backward along the trace.

    If Q(t_star) >= 4 + eta, checks Q(t) >= 4 + zeta(t_star - t) for all
    recorded t <= t_star, where zeta(s) is the backward bound with gap eta
    propagated over a time s; also checks the discrete differential
    inequality dQ/dt <= Q(Q - 4) + tol.  Returns a report dict; a quotient
    below the hypothesis at t_star gives status "hypothesis-not-met".
    """
    times = np.asarray(trace.times)
    qs = np.asarray([math.nan if q is None else q for q in trace.quotient])
    if times[-1] < t_star:
        raise ValueError(f"trace ends at t={times[-1]} before t_star={t_star}")
    i_star = int(np.argmin(np.abs(times - t_star)))
    q_star = qs[i_star]
    report = {"t_star": float(times[i_star]), "q_star": float(q_star),
              "eta": eta}
    if not math.isfinite(q_star) or q_star < 4.0 + eta:
        report["status"] = "hypothesis-not-met"
        return report
    sel = slice(0, i_star + 1)
    lags = times[i_star] - times[sel]
    e = np.exp(-4.0 * lags)
    zeta = 4.0 * eta * e / (4.0 + eta - eta * e)
    margin = qs[sel] - (4.0 + zeta)
    ok_bound = bool(np.all(margin >= -tol))
    dq = np.diff(qs[sel]) / np.diff(times[sel])
    qm = qs[sel][:-1]
    ok_ode = bool(np.all(dq <= qm * (qm - 4.0) + tol))
    report.update({
        "status": "pass" if (ok_bound and ok_ode) else "fail",
        "zeta_at_zero": float(zeta[0]),
        "min_margin": float(np.min(margin)),
        "bound_holds": ok_bound,
        "ode_inequality_holds": ok_ode,
    })
    return report


def eep_stability_check(v: RadialProfile, m: float, zeta: float,
                        tol: float = 1e-3) -> dict:
    """Check I - 4F >= zeta/(4+zeta) * I for an admissible profile."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    pair = functionals.entropy_pair(v, m)
    lhs = pair.fisher - 4.0 * pair.free_energy
    rhs = zeta / (4.0 + zeta) * pair.fisher
    scale = max(pair.fisher, 1e-300)
    return {
        "free_energy": pair.free_energy,
        "fisher": pair.fisher,
        "zeta": zeta,
        "slack": lhs - rhs,
        "status": "pass" if lhs - rhs >= -tol * scale else "fail",
    }


def extinction_profile_check(trace: FlowTrace, d: int) -> float:
    """Weighted relative distance of the end state to the separable shape.

    Fits the scale lambda of the profile lambda^{-(d+2)/2} g(r/lambda)^q
    (q = (d+2)/(d-2), amplitude free) to the normalized terminal state by
    least squares over log lambda, then returns
    max over nodes of (1+r^2)^{d+2} |v / fit - 1|.  The sup is restricted to
    where the fitted profile exceeds 1e-3 of its peak: further out the
    terminal values are solver noise and the rapidly growing weight turns
    them into meaningless astronomic numbers.
    """
    if trace.extinction_time is None:
        raise ExtinctionNotReached("run did not reach the extinction "
                                   "threshold")
    v = trace.final_state
    return terminal_shape_distance(v, d)


def terminal_shape_distance(v: RadialProfile, d: int) -> float:
    """Shape distance of a profile to the scaled extinction family."""
    grid = v.grid
    r = grid.nodes
    q = (d + 2.0) / (d - 2.0)
    vals = v.values / np.max(v.values)
    w = grid.weights * r ** (d - 1)

    def shape(lam):
        return (1.0 + (r / lam) ** 2) ** (-(d + 2.0) / 2.0)

    def objective(log_lam):
        s = shape(math.exp(log_lam))
        amp = float(w @ (s * vals)) / float(w @ (s * s))
        return float(w @ (vals - amp * s) ** 2)

    log_lam, _ = _golden_min(objective, math.log(1e-2), math.log(1e2))
    s = shape(math.exp(log_lam))
    amp = float(w @ (s * vals)) / float(w @ (s * s))
    fit = amp * s
    mask = fit > 1e-3 * np.max(fit)
    err = (1.0 + r[mask] ** 2) ** (d + 2.0) * np.abs(vals[mask] / fit[mask] - 1.0)
    return float(np.max(err))
