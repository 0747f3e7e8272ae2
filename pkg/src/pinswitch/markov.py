"""Continuous-time Markov chains: generators, embedded chains, sample paths."""

import csv
import io
from dataclasses import dataclass
from math import gcd

import numpy as np

from .matlin import ABS_TOL, REL_TOL, maxabs


class ErgodicityError(ValueError):
    pass


def make_rng(seed, stream=0):
    """Independent, reproducible generator for the substream ``(seed, stream)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class MarkovGenerator:
    """Rate matrix ``Q`` of a finite continuous-time chain."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("generator must be square")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ValueError("off-diagonal rates must be nonnegative")
        scale = max(1.0, maxabs(Q))
        if np.any(np.abs(Q.sum(axis=1)) > 1e-12 * scale):
            raise ValueError("generator rows must sum to zero")
        if np.any(-np.diag(Q) <= 0):
            raise ValueError("every state needs a positive exit rate q_i")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def N(self):
        return self.Q.shape[0]

    @property
    def rates(self):
        """Exit rates ``q_i = -q_ii``."""
        return -np.diag(self.Q)

    @property
    def embedded(self):
        """Jump chain ``p_ij = q_ij / q_i`` with zero diagonal."""
        P = self.Q / self.rates[:, None]
        np.fill_diagonal(P, 0.0)
        return P


def check_embedded(P):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(P < 0) or np.any(P > 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    if np.any(np.diag(P) != 0):
        raise ValueError("embedded chain must have zero diagonal")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("transition matrix rows must sum to one")
    return P


def assemble_generator(P, q):
    """Build ``Q`` from an embedded chain and exit rates.

    The diagonal is set to minus the off-diagonal row sum so rows sum to zero
    exactly.
    """
    P = check_embedded(P)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != P.shape[0]:
        raise ValueError("rate vector length does not match transition matrix")
    if np.any(q <= 0):
        raise ValueError("exit rates must be positive")
    Q = q[:, None] * P
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return MarkovGenerator(Q)


def _support_graph_period(A):
    """Period of an irreducible boolean adjacency matrix (BFS level gcd)."""
    n = A.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    period = 0
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(A[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
                else:
                    period = gcd(period, int(level[u] + 1 - level[v]))
        frontier = nxt
    return period


def is_irreducible(P):
    from scipy.sparse.csgraph import connected_components

    A = (np.asarray(P) > 0).astype(float)
    ncomp, _ = connected_components(A, directed=True, connection="strong")
    return ncomp == 1


def is_primitive(P):
    """Irreducible and aperiodic support."""
    P = np.asarray(P)
    if P.shape[0] == 1:
        return bool(P[0, 0] > 0)
    if not is_irreducible(P):
        return False
    return _support_graph_period(P > 0) == 1


@dataclass(frozen=True)
class InvariantDistribution:
    pi: np.ndarray
    pi_bar: np.ndarray
    aperiodic: bool = True


def stationary_of_stochastic(P):
    """Left fixed point of a row-stochastic matrix, normalized to sum 1."""
    N = P.shape[0]
    A = P.T - np.eye(N)
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def generator_null_vector(Q):
    """Solve ``pi Q = 0``, ``sum(pi) = 1`` directly."""
    N = Q.shape[0]
    A = np.array(Q, dtype=float).T
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def invariant_distribution(gen, require_aperiodic=False):
    """Invariant law of the chain via the embedded stationary vector.

    ``pi_j`` is ``pi_bar_j / q_j`` renormalized, which weights each jump-chain
    state by its mean sojourn. The result is cross-checked against a direct
    solve of ``pi Q = 0``.

    Irreducibility is required. A periodic jump chain still has a unique
    ``pi_bar`` and the continuous-time chain is still ergodic, so periodicity
    is only reported (``aperiodic=False``) unless ``require_aperiodic`` is set.
    Periodicity does matter for convergence of ``pi(k)``.
    """
    P = gen.embedded
    if not is_irreducible(P):
        raise ErgodicityError("embedded chain is reducible")
    aperiodic = is_primitive(P)
    if require_aperiodic and not aperiodic:
        raise ErgodicityError("embedded chain is periodic")
    pi_bar = stationary_of_stochastic(P)
    w = pi_bar / gen.rates
    pi = w / w.sum()
    direct = generator_null_vector(gen.Q)
    tol = max(REL_TOL, ABS_TOL)
    if np.max(np.abs(pi - direct)) > tol or maxabs(pi @ gen.Q) > REL_TOL * maxabs(gen.Q):
        raise ErgodicityError("invariant distribution routes disagree")
    return InvariantDistribution(pi=pi, pi_bar=pi_bar, aperiodic=aperiodic)


def kstep_distribution(P, pi0, k):
    """Distribution after ``k`` jumps, ``pi0 P^k``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return np.asarray(pi0, float) @ np.linalg.matrix_power(np.asarray(P, float), int(k))


@dataclass(frozen=True)
class SwitchPath:
    """Piecewise-constant state trajectory: ``states[k]`` is active from ``times[k]``."""

    states: np.ndarray
    times: np.ndarray
    horizon: float

    def state_at(self, t):
        return int(self.states[np.searchsorted(self.times, t, side="right") - 1])

    def sojourns(self):
        """(state, duration) of every fully observed sojourn, excluding the censored last one."""
        return self.states[:-1], np.diff(self.times)

    def occupancy(self, N=None):
        """Fraction of ``[0, horizon]`` spent in each state."""
        N = int(self.states.max()) + 1 if N is None else N
        ends = np.append(self.times[1:], self.horizon)
        out = np.zeros(N)
        np.add.at(out, self.states, ends - self.times)
        return out / self.horizon

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["entry_time", "state"])
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t)), int(s) + 1])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, horizon):
        rows = list(csv.DictReader(io.StringIO(text)))
        times = np.array([float(r["entry_time"]) for r in rows])
        states = np.array([int(r["state"]) - 1 for r in rows])
        return cls(states=states, times=times, horizon=float(horizon))


def sample_path(gen, initial, horizon, seed, stream=0, max_jumps=None):
    """Exact jump-by-jump simulation of the chain on ``[0, horizon]``.

    ``initial`` is a state index or a probability vector. Sojourns are
    exponential with rate ``q_i`` (inverse CDF), destinations follow the
    embedded chain. With ``max_jumps`` the path stops after that many jumps
    and ``horizon`` is truncated to the last entry time plus its sojourn.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = make_rng(seed, stream)
    q = gen.rates
    cum = np.cumsum(gen.embedded, axis=1)
    cum[:, -1] = 1.0
    if np.ndim(initial) == 0:
        state = int(initial)
    else:
        p0 = np.asarray(initial, float)
        state = int(np.searchsorted(np.cumsum(p0), rng.random() * p0.sum(), side="right"))
    states = [state]
    times = [0.0]
    t = 0.0
    while True:
        t += -np.log1p(-rng.random()) / q[state]
        if t >= horizon:
            break
        if max_jumps is not None and len(states) - 1 >= max_jumps:
            horizon = t
            break
        state = int(np.searchsorted(cum[state], rng.random(), side="right"))
        states.append(state)
        times.append(t)
    return SwitchPath(states=np.array(states), times=np.array(times), horizon=float(horizon))
