"""Pinned network with Markov-switched coupling and controller set.

Node states are kept as an ``(m, n)`` array, one row per node, so ``Gamma x^j``
for all nodes is ``X @ Gamma.T`` and the coupling term is ``L @ X @ Gamma.T``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .matlin import check_metzler

DIVERGENCE_GUARD = 1e12


class DivergenceError(RuntimeError):
    pass


@dataclass
class SwitchedTopology:
    L: list
    C: list

    def __post_init__(self):
        if len(self.L) == 0:
            raise ValueError("topology family is empty")
        if len(self.L) != len(self.C):
            raise ValueError("need one pinning matrix per coupling matrix")
        self.L = [check_metzler(Li, f"L({k + 1})") for k, Li in enumerate(self.L)]
        m = self.L[0].shape[0]
        C = []
        for k, Ci in enumerate(self.C):
            Ci = np.asarray(Ci, dtype=float)
            if Ci.ndim == 1:
                Ci = np.diag(Ci)
            if Ci.shape != (m, m) or self.L[k].shape != (m, m):
                raise ValueError(f"state {k + 1}: inconsistent matrix sizes")
            if np.any(Ci != np.diag(np.diag(Ci))) or not np.all(np.isin(np.diag(Ci), (0.0, 1.0))):
                raise ValueError(f"C({k + 1}) must be diagonal with 0/1 entries")
            C.append(Ci)
        self.C = C

    @property
    def m(self):
        return self.L[0].shape[0]

    @property
    def N(self):
        return len(self.L)


@dataclass(frozen=True)
class CouplingParams:
    kappa: float
    eps: float

    def __post_init__(self):
        if self.kappa <= 0 or self.eps <= 0:
            raise ValueError("coupling strength and pinning gain must be positive")


def coupled_rhs(X, s, t, L, c, dyn, cp):
    """Time derivative of node states ``X`` (m x n) and target ``s`` (n,).

    ``c`` is the 0/1 pinning vector (diagonal of C).
    """
    X = np.asarray(X, dtype=float)
    s = np.asarray(s, dtype=float)
    if X.ndim != 2 or X.shape[1] != s.shape[0] or L.shape != (X.shape[0],) * 2:
        raise ValueError("state dimensions do not match topology")
    G = dyn.Gamma
    dX = dyn.f(X, t) + cp.kappa * (L @ X) @ G.T + (cp.kappa * cp.eps) * c[:, None] * ((s - X) @ G.T)
    return dX, dyn.f(s, t)


def rk4_step(rhs, y, t, h):
    """One classical Runge-Kutta step for ``y' = rhs(y, t)``."""
    k1 = rhs(y, t)
    k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(y + h * k3, t + h)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite state after RK4 step at t={t}")
    return out


def _network_rhs(L, c, dyn, cp, m, n):
    def rhs(y, t):
        dX, ds = coupled_rhs(y[: m * n].reshape(m, n), y[m * n:], t, L, c, dyn, cp)
        return np.concatenate([dX.ravel(), ds])

    return rhs


def varsigma(X, s):
    """Max over nodes of the max-abs componentwise deviation from the target."""
    E = np.asarray(X, float) - np.asarray(s, float)
    return float(np.max(np.abs(E))) if E.size else 0.0


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    state: np.ndarray  # active Markov state (0-based) at each sample
    varsigma: np.ndarray
    node_err: np.ndarray  # (samples, m) max-abs error per node
    sq_err: np.ndarray  # (samples,) mean over nodes of ||x^i - s||_2^2
    diverged: bool = False
    step_times: np.ndarray = field(default=None, repr=False)

    def to_csv(self, per_node=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        m = self.node_err.shape[1]
        head = ["t", "sigma_state", "varsigma"]
        if per_node:
            head += [f"err_node_{i + 1}" for i in range(m)]
        w.writerow(head)
        for k in range(len(self.t)):
            row = [f"{self.t[k]:.10g}", int(self.state[k]) + 1, f"{self.varsigma[k]:.10e}"]
            if per_node:
                row += [f"{e:.10e}" for e in self.node_err[k]]
            w.writerow(row)
        return buf.getvalue()


class _Recorder:
    def __init__(self, m):
        self.t, self.state, self.vs, self.node, self.sq = [], [], [], [], []

    def add(self, t, sigma, X, s):
        E = X - s
        self.t.append(t)
        self.state.append(sigma)
        ne = np.max(np.abs(E), axis=1)
        self.node.append(ne)
        self.vs.append(float(ne.max()))
        self.sq.append(float(np.mean(np.sum(E * E, axis=1))))

    def record(self, diverged, step_times=None):
        return TrajectoryRecord(
            t=np.array(self.t),
            state=np.array(self.state, dtype=int),
            varsigma=np.array(self.vs),
            node_err=np.array(self.node),
            sq_err=np.array(self.sq),
            diverged=diverged,
            step_times=None if step_times is None else np.array(step_times),
        )


def integrate_schedule(schedule, dyn, cp, x0, s0, h, horizon, stride=1, keep_steps=False):
    """Fixed-step RK4 of the pinned network under a topology schedule.

    ``schedule(k, t)`` is called at the start of grid step ``k`` and returns
    ``(sigma, L, c, breaks)``: the label of the active topology, its matrices,
    and an ascending list of ``(time, sigma, L, c)`` switches falling strictly
    inside ``(t, t + h)``. Steps are split at those switch times so no RK4
    stage ever mixes two topologies. The target is co-integrated with the
    same step sequence. Samples are taken every ``stride`` grid steps.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    X = np.array(x0, dtype=float)
    s = np.array(s0, dtype=float).reshape(-1)
    m, n = X.shape
    y = np.concatenate([X.ravel(), s])
    nsteps = int(round(horizon / h))
    if abs(nsteps * h - horizon) > 1e-9 * max(1.0, horizon):
        nsteps = int(np.ceil(horizon / h))
    rec = _Recorder(m)
    step_times = [0.0] if keep_steps else None
    sigma, L, c, _ = schedule(0, 0.0)
    rec.add(0.0, sigma, X, s)
    diverged = False
    for k in range(nsteps):
        t0 = k * h
        t1 = min((k + 1) * h, horizon)
        sigma, L, c, breaks = schedule(k, t0)
        t = t0
        try:
            for tb, sig_b, L_b, c_b in list(breaks) + [(t1, None, None, None)]:
                if tb > t:
                    y = rk4_step(_network_rhs(L, c, dyn, cp, m, n), y, t, tb - t)
                    t = tb
                    if keep_steps:
                        step_times.append(t)
                if sig_b is not None:
                    sigma, L, c = sig_b, L_b, c_b
        except DivergenceError:
            diverged = True
        if not diverged and np.max(np.abs(y)) > DIVERGENCE_GUARD:
            diverged = True
        if diverged:
            rec.add(t1, sigma, y[: m * n].reshape(m, n), y[m * n:])
            break
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            rec.add(t1, sigma, y[: m * n].reshape(m, n), y[m * n:])
    return rec.record(diverged, step_times)


def simulate(topo, dyn, cp, path, x0, s0, h, horizon, stride=1, keep_steps=False):
    """Integrate the network along a Markov switching path.

    The topology is held fixed between jump times; any grid step that
    straddles a jump is split at the jump.
    """
    if path.horizon < horizon - 1e-12:
        raise ValueError("switching path is shorter than the simulation horizon")
    times, states = path.times, path.states
    cvec = [np.diag(Ci).copy() for Ci in topo.C]

    def schedule(k, t):
        j = int(np.searchsorted(times, t, side="right") - 1)
        sig = int(states[j])
        t_end = t + h
        breaks = []
        j += 1
        while j < len(times) and times[j] < t_end:
            if times[j] > t:
                sb = int(states[j])
                breaks.append((float(times[j]), sb, topo.L[sb], cvec[sb]))
            j += 1
        return sig, topo.L[sig], cvec[sig], breaks

    return integrate_schedule(schedule, dyn, cp, x0, s0, h, horizon, stride=stride, keep_steps=keep_steps)


def default_stride(h, horizon, max_samples=100_000):
    return max(1, int(np.ceil(horizon / h / max_samples)))


@dataclass
class MeanSquareFit:
    t: np.ndarray
    mse: np.ndarray
    rate: float
    intercept: float
    stderr: float
    runs: int


def fit_log_rate(t, y, window=None, floor=1e-24):
    """Least-squares slope of ``log y`` against ``t``.

    Points at or below ``floor`` are dropped (roundoff plateau). Returns
    ``(rate, intercept, stderr)``; an all-zero series gives rate 0.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    mask = y > floor
    if window is not None:
        mask &= (t >= window[0]) & (t <= window[1])
    if mask.sum() < 2:
        return 0.0, float("-inf") if not mask.any() else float(np.log(y[mask][0])), 0.0
    tt, ly = t[mask], np.log(y[mask])
    A = np.vstack([tt, np.ones_like(tt)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    dof = len(tt) - 2
    if dof > 0:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / dof
        stderr = float(np.sqrt(s2 / np.sum((tt - tt.mean()) ** 2)))
    else:
        stderr = 0.0
    return float(coef[0]), float(coef[1]), stderr


def mean_square_error(records, window=None, floor=1e-24):
    """Ensemble average of squared node errors with an exponential-rate fit."""
    records = list(records)
    if not records:
        raise ValueError("need at least one run")
    t = records[0].t
    for r in records[1:]:
        if r.t.shape != t.shape or np.any(np.abs(r.t - t) > 1e-12):
            raise ValueError("runs are on different time grids")
    mse = np.mean([r.sq_err for r in records], axis=0)
    rate, icpt, se = fit_log_rate(t, mse, window, floor)
    return MeanSquareFit(t=t, mse=mse, rate=rate, intercept=icpt, stderr=se, runs=len(records))
