"""Random-waypoint agents, proximity coupling and spatial pinning."""

from dataclasses import dataclass

import numpy as np

WAITING, MOVING = 0, 1


@dataclass(frozen=True)
class MobilityConfig:
    m: int = 10
    width: float = 100.0
    region: tuple = (0.0, 50.0, 0.0, 50.0)  # x0, x1, y0, y1 of the control region
    r_link: float = 10.0
    v_min: float = 500.0
    v_max: float = 600.0
    w_min: float = 0.29
    w_max: float = 0.33

    def __post_init__(self):
        x0, x1, y0, y1 = self.region
        if not (0 <= x0 <= x1 <= self.width and 0 <= y0 <= y1 <= self.width):
            raise ValueError("control region must lie inside the arena")
        if self.r_link <= 0:
            raise ValueError("interaction radius must be positive")
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        if not 0 <= self.w_min <= self.w_max:
            raise ValueError("need 0 <= w_min <= w_max")
        if self.m < 1:
            raise ValueError("need at least one agent")


@dataclass
class Agents:
    """Vectorized agent state; every field has one entry per agent."""

    pos: np.ndarray  # (m, 2)
    mode: np.ndarray  # WAITING or MOVING
    target: np.ndarray  # (m, 2)
    speed: np.ndarray
    wait: np.ndarray  # remaining wait while WAITING

    def copy(self):
        return Agents(self.pos.copy(), self.mode.copy(), self.target.copy(), self.speed.copy(), self.wait.copy())


def init_agents(cfg, rng):
    """Uniform positions; every agent starts waiting with a fresh wait."""
    m = cfg.m
    return Agents(
        pos=rng.uniform(0.0, cfg.width, size=(m, 2)),
        mode=np.full(m, WAITING),
        target=np.zeros((m, 2)),
        speed=np.zeros(m),
        wait=rng.uniform(cfg.w_min, cfg.w_max, size=m),
    )


def rwp_step(agents, dt, cfg, rng):
    """Advance every agent by ``dt`` (in place) and return it.

    Time left over after reaching a waypoint is spent waiting; time left over
    after a wait expires is spent moving toward the newly drawn waypoint.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = agents
    left = np.full(a.pos.shape[0], float(dt))
    for _ in range(64):
        active = left > 0
        if not active.any():
            break
        mv = active & (a.mode == MOVING)
        if mv.any():
            d = a.target[mv] - a.pos[mv]
            dist = np.hypot(d[:, 0], d[:, 1])
            reach = dist / a.speed[mv]
            arrive = reach <= left[mv]
            idx = np.flatnonzero(mv)
            ia, ib = idx[arrive], idx[~arrive]
            if ib.size:
                frac = (a.speed[ib] * left[ib] / dist[~arrive])[:, None]
                a.pos[ib] += frac * d[~arrive]
                left[ib] = 0.0
            if ia.size:
                a.pos[ia] = a.target[ia]
                left[ia] -= reach[arrive]
                a.mode[ia] = WAITING
                a.speed[ia] = 0.0
                a.wait[ia] = rng.uniform(cfg.w_min, cfg.w_max, size=ia.size)
        wt = (left > 0) & (a.mode == WAITING)
        if wt.any():
            idx = np.flatnonzero(wt)
            expire = a.wait[idx] <= left[idx]
            ie, ik = idx[expire], idx[~expire]
            if ik.size:
                a.wait[ik] -= left[ik]
                left[ik] = 0.0
            if ie.size:
                left[ie] -= a.wait[ie]
                a.wait[ie] = 0.0
                a.mode[ie] = MOVING
                a.target[ie] = rng.uniform(0.0, cfg.width, size=(ie.size, 2))
                a.speed[ie] = rng.uniform(cfg.v_min, cfg.v_max, size=ie.size)
    np.clip(a.pos, 0.0, cfg.width, out=a.pos)
    return a


def proximity_topology(pos, r_link):
    """Symmetric 0/1 coupling with zero row sums; agents within ``r_link`` are linked."""
    pos = np.asarray(pos, float)
    d = pos[:, None, :] - pos[None, :, :]
    adj = (np.einsum("ijk,ijk->ij", d, d) <= r_link * r_link).astype(float)
    np.fill_diagonal(adj, 0.0)
    L = adj
    np.fill_diagonal(L, -adj.sum(axis=1))
    return L


def spatial_pinning(pos, region):
    """0/1 pinning vector; points on the region boundary are pinned."""
    pos = np.asarray(pos, float)
    x0, x1, y0, y1 = region
    inside = (pos[:, 0] >= x0) & (pos[:, 0] <= x1) & (pos[:, 1] >= y0) & (pos[:, 1] <= y1)
    return inside.astype(float)


def escape_bounds(v_min, w_max, p_bar, p_tilde, d, d_tilde):
    """Upper bounds on the expected link-escape and region-escape times.

    Returns ``(d/(p_bar v) + (1-p_bar) w/p_bar, d~/(p~ v) + (1-p~) w/p~)``.
    """
    for p in (p_bar, p_tilde):
        if not 0 < p <= 1:
            raise ValueError("probabilities must lie in (0, 1]")
    if v_min <= 0:
        raise ValueError("v_min must be positive")
    w = d / (p_bar * v_min) + (1 - p_bar) * w_max / p_bar
    e = d_tilde / (p_tilde * v_min) + (1 - p_tilde) * w_max / p_tilde
    return w, e


@dataclass
class MobilityStats:
    horizon: float
    samples: int
    pin_fraction: float
    link_frequency: float


def run_mobility(cfg, horizon, dt, seed, stride=1, dump=None, stream=0):
    """Simulate agents alone and collect pin/link statistics.

    ``dump`` (optional list) receives ``(t, agent, x, y, pinned)`` rows every
    ``stride`` steps.
    """
    from .markov import make_rng

    rng = make_rng(seed, stream)
    agents = init_agents(cfg, rng)
    nsteps = int(round(horizon / dt))
    m = cfg.m
    iu = np.triu_indices(m, 1)
    pins = links = 0.0
    count = 0
    for k in range(nsteps):
        rwp_step(agents, dt, cfg, rng)
        if (k + 1) % stride:
            continue
        c = spatial_pinning(agents.pos, cfg.region)
        L = proximity_topology(agents.pos, cfg.r_link)
        pins += c.mean()
        links += L[iu].mean() if m > 1 else 0.0
        count += 1
        if dump is not None:
            t = (k + 1) * dt
            dump.extend((t, i + 1, agents.pos[i, 0], agents.pos[i, 1], int(c[i])) for i in range(m))
    return MobilityStats(horizon=float(horizon), samples=count, pin_fraction=float(pins / max(count, 1)),
                         link_frequency=float(links / max(count, 1)))
