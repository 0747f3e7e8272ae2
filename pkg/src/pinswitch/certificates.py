"""Stabilization certificates for the Markov-switched pinned network.

Three checks live here:

* the slow-switching matrix inequality with per-state diagonal weights, plus
  the mean-square decay rate it guarantees;
* the Perron-weight construction for strongly connected topologies and the
  per-state exit-rate bound it implies;
* the fast-switching constants K1..K4, rho, the window condition on Delta and
  a search for the largest admissible window.

Max-abs entry (``matlin.maxabs``) is used wherever a matrix "infinity norm"
appears in the constants.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .matlin import (
    ConnectivityError,
    kron,
    maxabs,
    perron_left_vector,
    rebalance_diagonal,
    sym_eig_extremes,
    symmetric_part,
)


class CertificateInapplicable(ValueError):
    pass


def psd_tol(M):
    return 1e-9 * max(1.0, maxabs(M))


def _closed_loop(P, L, C, alpha, cp):
    m = L.shape[0]
    return P @ (alpha * np.eye(m) + cp.kappa * L - cp.kappa * cp.eps * C)


def _as_weights(weights, N, m):
    if weights is None:
        return [np.eye(m) for _ in range(N)]
    if isinstance(weights, np.ndarray) and weights.ndim == 2:
        weights = [weights] * N
    out = []
    for P in weights:
        P = np.asarray(P, float)
        if P.ndim == 1:
            P = np.diag(P)
        if P.shape != (m, m) or np.any(P != np.diag(np.diag(P))) or np.any(np.diag(P) <= 0):
            raise ValueError("Lyapunov weights must be positive diagonal m x m matrices")
        out.append(P)
    if len(out) != N:
        raise ValueError("need one weight matrix per Markov state")
    return out


@dataclass
class SlowCertificate:
    lam_max: np.ndarray
    tolerances: np.ndarray
    passed: bool
    delta: Optional[float] = None


def theorem1_matrices(topo, weights, Q, alpha, cp, G=None, Gamma=None):
    """Per-state symmetric matrices of the slow-switching condition.

    ``M_i = sym(P_i[alpha I + kappa L(i) - kappa eps C(i)] (x) G Gamma) + sum_j q_ij P_j (x) G``.
    """
    Q = np.asarray(getattr(Q, "Q", Q), dtype=float)
    N, m = topo.N, topo.m
    if Q.shape != (N, N):
        raise ValueError("generator size does not match the number of topologies")
    W = _as_weights(weights, N, m)
    n = 1 if G is None and Gamma is None else np.asarray(G if G is not None else Gamma).shape[0]
    G = np.eye(n) if G is None else np.asarray(G, float)
    Gamma = np.eye(n) if Gamma is None else np.asarray(Gamma, float)
    if G.shape != Gamma.shape:
        raise ValueError("G and Gamma must have the same shape")
    GG = G @ Gamma
    out = []
    for i in range(N):
        M = symmetric_part(kron(_closed_loop(W[i], topo.L[i], topo.C[i], alpha, cp), GG))
        for j in range(N):
            if Q[i, j] != 0.0:
                M = M + Q[i, j] * kron(W[j], G)
        out.append(M)
    return out


def theorem1_check(topo, weights, Q, alpha, cp, G=None, Gamma=None, beta=None):
    """Slow-switching certificate: every ``M_i`` negative semidefinite."""
    Ms = theorem1_matrices(topo, weights, Q, alpha, cp, G, Gamma)
    lam = np.array([sym_eig_extremes(M)[1] for M in Ms])
    tol = np.array([psd_tol(M) for M in Ms])
    passed = bool(np.all(lam <= tol))
    delta = None
    if beta is not None:
        delta = decay_rate(_as_weights(weights, topo.N, topo.m), beta, G)
    return SlowCertificate(lam_max=lam, tolerances=tol, passed=passed, delta=delta)


def decay_rate(weights, beta, G=None):
    """Guaranteed mean-square decay rate.

    ``2 beta min_{i,j} (P_j)_ii / max_i lambda_max(P_i (x) G)``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    W = [np.diag(P) if np.ndim(P) == 1 else np.asarray(P, float) for P in weights]
    G = np.eye(1) if G is None else np.asarray(G, float)
    pmin = min(float(np.min(np.diag(P))) for P in W)
    lmax = max(sym_eig_extremes(kron(P, G))[1] for P in W)
    return 2.0 * beta * pmin / lmax


def theorem2_construct(topo):
    """Diagonal Perron weights ``P_i = diag(p^i)`` with ``p^i L(i) = 0``.

    Also checks that ``{P_i L(i)}^s`` is negative semidefinite with a simple
    zero eigenvalue.
    """
    W = []
    for i, L in enumerate(topo.L):
        try:
            p = perron_left_vector(L)
        except ConnectivityError as exc:
            raise ConnectivityError(f"L({i + 1}) is not strongly connected") from exc
        P = np.diag(p)
        w = np.linalg.eigvalsh(symmetric_part(P @ L))
        tol = psd_tol(L)
        if w[-1] > tol or (len(w) > 1 and w[-2] >= -tol):
            raise CertificateInapplicable(f"state {i + 1}: weighted coupling is not semidefinite with simple zero")
        W.append(P)
    return W


def per_state_lambda(topo, weights, alpha, cp):
    """``lambda_max({P_i[alpha I + kappa L(i) - kappa eps C(i)]}^s)`` for every state."""
    W = _as_weights(weights, topo.N, topo.m)
    return np.array(
        [sym_eig_extremes(symmetric_part(_closed_loop(W[i], topo.L[i], topo.C[i], alpha, cp)))[1] for i in range(topo.N)]
    )


def theorem2_rate_bound(topo, weights, alpha, cp):
    """Largest exit rate per state allowed by the Perron-weight argument.

    ``q_i <= -lambda_max({P_i[...]}^s) / max_j lambda_max(P_j)``.
    """
    W = _as_weights(weights, topo.N, topo.m)
    lam = per_state_lambda(topo, W, alpha, cp)
    if np.any(lam >= 0):
        bad = [i + 1 for i in np.flatnonzero(lam >= 0)]
        raise CertificateInapplicable(f"per-state matrices not negative definite in states {bad}")
    pmax = max(float(np.max(np.diag(P))) for P in W)
    return -lam / pmax


def average_matrices(pi, topo):
    """pi-weighted averages of the coupling and pinning matrices."""
    pi = np.asarray(pi, float)
    if pi.shape != (topo.N,):
        raise ValueError("distribution length does not match the topology family")
    Lbar = rebalance_diagonal(sum(p * L for p, L in zip(pi, topo.L)))
    Cbar = np.diag(np.clip(np.diag(sum(p * C for p, C in zip(pi, topo.C))), 0.0, 1.0))
    return Lbar, Cbar


def rwp_average_matrices(m, link_prob, pin_prob):
    """Average network for exchangeable mobile agents: ``l(11^T) - m l I`` and ``c I``."""
    Lbar = link_prob * (np.ones((m, m)) - m * np.eye(m))
    return Lbar, pin_prob * np.eye(m)


@dataclass
class FastConstants:
    K1: float
    K2: float
    K3: float
    K4: float
    rho: float
    lam_min_P: float
    lam_max_P: float
    K4_drift: float = 0.0  # max_i ||A(i)||(1 + Lf^2) part, before the mn factor
    K4_mixed: float = 0.0
    average_nsd: bool = False  # precondition: {P(alpha I + kappa Lbar - kappa eps Cbar)}^s <= 0


def fast_constants(Ls, Cs, P, alpha, beta, Lf, cp, G=None, Gamma=None, pi=None, Lbar=None, Cbar=None):
    """Constants of the fast-switching window condition.

    ``Ls``/``Cs`` enumerate the topology states. The averages are taken from
    ``pi`` unless given explicitly (e.g. the closed-form mobile-agent averages).
    """
    Ls = [np.asarray(L, float) for L in Ls]
    Cs = [np.diag(C) if np.ndim(C) == 1 else np.asarray(C, float) for C in Cs]
    m = Ls[0].shape[0]
    P = _as_weights(P, 1, m)[0]
    n = 1 if G is None and Gamma is None else np.asarray(G if G is not None else Gamma).shape[0]
    G = np.eye(n) if G is None else np.asarray(G, float)
    Gamma = np.eye(n) if Gamma is None else np.asarray(Gamma, float)
    GG = G @ Gamma
    if Lbar is None or Cbar is None:
        if pi is None:
            raise ValueError("need either pi or explicit averages")
        pi = np.asarray(pi, float)
        Lbar = rebalance_diagonal(sum(p * L for p, L in zip(pi, Ls)))
        Cbar = sum(p * C for p, C in zip(pi, Cs))
    Ptil = kron(P, G)
    lam_m, lam_M = sym_eig_extremes(Ptil)
    k, ke = cp.kappa, cp.kappa * cp.eps

    K1 = beta * float(np.min(np.diag(P)))
    K2 = 0.0
    for L, C in zip(Ls, Cs):
        w = np.linalg.eigvalsh(symmetric_part(kron(_closed_loop(P, L, C, alpha, cp), GG)))
        K2 = max(K2, float(np.max(np.abs(w))))
    K3 = sym_eig_extremes(symmetric_part(kron(_closed_loop(P, Lbar, Cbar, alpha, cp), GG)))[1]

    A = np.array([symmetric_part(kron(P @ (k * (L - Lbar) - ke * (C - Cbar)), GG)) for L, C in zip(Ls, Cs)])
    B = np.array([kron(k * L - ke * C, Gamma) for L, C in zip(Ls, Cs)])
    drift = float(np.max(np.abs(A))) * (1.0 + Lf**2)
    mixed = max(float(np.max(np.abs(Ai @ B))) for Ai in A)
    K4 = m * n * (drift + mixed)
    rho = 2.0 * K2 / lam_m + 2.0 * K1 / lam_M
    M_avg = symmetric_part(kron(_closed_loop(P, Lbar, Cbar, alpha, cp), GG))
    return FastConstants(
        K1=K1, K2=K2, K3=K3, K4=K4, rho=rho, lam_min_P=lam_m, lam_max_P=lam_M,
        K4_drift=drift, K4_mixed=mixed, average_nsd=bool(K3 <= psd_tol(M_avg)),
    )


def delta_condition(K1, K3, K4, rho, delta, lam_min_P=1.0, lam_max_P=1.0):
    """Left-hand side of the window condition; admissible iff negative.

    ``delta`` may be an array, in which case an array is returned.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0) or rho <= 0:
        raise ValueError("delta and rho must be positive")
    a = (K1 - K3) * lam_min_P / (rho * lam_max_P)
    b = K4 * lam_max_P * delta / (rho * lam_min_P)
    with np.errstate(over="ignore", invalid="ignore"):  # huge windows evaluate to +inf, i.e. inadmissible
        out = -a * (-np.expm1(-rho * delta)) + b * np.expm1(rho * delta)
    return float(out) if out.ndim == 0 else out


@dataclass
class FeasibleDelta:
    delta_star: Optional[float]
    reason: str = ""
    q_min_required: Optional[float] = None
    r: Optional[int] = None


def feasible_delta(K1, K3, K4, rho, lam_min_P=1.0, lam_max_P=1.0, r=None, lo=1e-8, hi=1.0, rtol=1e-12):
    """Largest window ``Delta*`` with a negative condition value.

    Log-spaced scan over ``[lo, hi]`` then bisection on the sign change. When
    ``r`` is given the induced exit-rate requirement ``1/(r Delta*)`` is
    returned too.
    """

    def f(d):
        return delta_condition(K1, K3, K4, rho, d, lam_min_P, lam_max_P)

    if K1 - K3 <= 0:
        return FeasibleDelta(None, reason="K1 - K3 <= 0: no window is admissible", r=r)
    # scalar form of the same expression for the bisection loop
    ca = (K1 - K3) * lam_min_P / (rho * lam_max_P)
    cb = K4 * lam_max_P / (rho * lam_min_P)
    grid = np.logspace(np.log10(lo), np.log10(hi), 801)
    vals = f(grid)
    neg = vals < 0
    if not neg[0]:
        return FeasibleDelta(None, reason=f"condition not negative even at Delta={lo:g}", r=r)
    if neg.all():
        ds = float(hi)
    else:
        j = int(np.argmin(neg))  # first non-negative grid point
        a, b = grid[j - 1], grid[j]
        fs = lambda d: -ca * (-math.expm1(-rho * d)) + cb * d * math.expm1(rho * d)  # noqa: E731
        while (b - a) > rtol * b:
            mid = 0.5 * (a + b)
            if fs(mid) < 0:
                a = mid
            else:
                b = mid
        ds = float(a)
    qreq = None if r is None else 1.0 / (r * ds)
    return FeasibleDelta(ds, q_min_required=qreq, r=r)


@dataclass
class FastSwitchCertificate:
    constants: FastConstants
    delta: float
    r: int
    lhs: float
    q_min_required: float
    passed: bool
    notes: list = field(default_factory=list)


def fast_certificate(consts, delta, r):
    lhs = delta_condition(consts.K1, consts.K3, consts.K4, consts.rho, delta, consts.lam_min_P, consts.lam_max_P)
    return FastSwitchCertificate(
        constants=consts, delta=delta, r=r, lhs=float(lhs), q_min_required=1.0 / (r * delta),
        passed=bool(lhs < 0 and consts.average_nsd and consts.rho > 0),
    )
