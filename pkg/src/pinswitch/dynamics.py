"""Node dynamics: the three-neuron cellular network and QUAD / Lipschitz checks."""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .markov import make_rng

# weight matrix of the chaotic three-neuron network (double-scroll attractor)
CNN_WEIGHTS = np.array(
    [
        [1.25, -3.2, -3.2],
        [-3.2, 1.1, -4.4],
        [-3.2, 4.4, 1.0],
    ]
)


def activation(s):
    """Saturating piecewise-linear activation ``(|s+1| - |s-1|) / 2``.

    Evaluated as a clip, which is the same function without the roundoff that
    pushes the two-absolute-value form slightly past +-1.
    """
    return np.clip(np.asarray(s, dtype=float), -1.0, 1.0)


@dataclass(frozen=True)
class CnnParams:
    D: np.ndarray = field(default_factory=lambda: np.eye(3))
    T: np.ndarray = field(default_factory=lambda: CNN_WEIGHTS.copy())


def cnn_rhs(x, params=None, t=0.0):
    """``-D x + T g(x)``; ``x`` may be a single state or a stack of states (last axis)."""
    if params is None:
        params = CnnParams()
    x = np.asarray(x, dtype=float)
    return -x @ params.D.T + activation(x) @ params.T.T


@dataclass
class DynamicsSpec:
    """Node vector field with its QUAD data.

    ``f(x, t)`` must accept a stack of states along the leading axes.
    """

    f: Callable
    n: int
    Gamma: np.ndarray = None
    G: np.ndarray = None
    alpha: float = 1.0
    beta: float = 0.5
    Lf: Optional[float] = None

    def __post_init__(self):
        if self.Gamma is None:
            self.Gamma = np.eye(self.n)
        if self.G is None:
            self.G = np.eye(self.n)
        self.Gamma = np.asarray(self.Gamma, float)
        self.G = np.asarray(self.G, float)
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if np.linalg.eigvalsh(0.5 * (self.G + self.G.T))[0] <= 0:
            raise ValueError("G must be positive definite")


def cnn_spec(params=None, alpha=1.0, beta=0.5, Lf=4.68):
    params = params or CnnParams()
    return DynamicsSpec(f=lambda x, t=0.0: cnn_rhs(x, params), n=3, alpha=alpha, beta=beta, Lf=Lf)


@dataclass
class QuadReport:
    samples: int
    violations: int
    worst_margin: float  # max over pairs of lhs + beta |d|^2; > 0 means violated
    worst_pair: tuple

    @property
    def violated(self):
        return self.violations > 0


def quad_margin(spec, xi, zeta, t=0.0):
    """Slack of the QUAD inequality for each pair (positive = violated).

    Computes ``d^T G [f(xi) - f(zeta) - alpha Gamma d] + beta d^T d`` with
    ``d = xi - zeta``.
    """
    d = xi - zeta
    df = spec.f(xi, t) - spec.f(zeta, t) - spec.alpha * d @ spec.Gamma.T
    return np.einsum("...i,ij,...j->...", d, spec.G, df) + spec.beta * np.einsum("...i,...i->...", d, d)


def quad_falsifier(spec, samples=100_000, box=(-5.0, 5.0), seed=0, batch=20_000, tol=1e-12):
    """Search random pairs in a box for QUAD counterexamples.

    This can only find violations; a clean report is not a membership proof.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    lo, hi = box
    rng = make_rng(seed, 1)
    worst, worst_pair, bad, done = -np.inf, None, 0, 0
    while done < samples:
        k = min(batch, samples - done)
        xi = rng.uniform(lo, hi, size=(k, spec.n))
        zeta = rng.uniform(lo, hi, size=(k, spec.n))
        marg = quad_margin(spec, xi, zeta)
        scale = np.maximum(1.0, np.einsum("ij,ij->i", xi - zeta, xi - zeta))
        bad += int(np.sum(marg > tol * scale))
        j = int(np.argmax(marg))
        if marg[j] > worst:
            worst, worst_pair = float(marg[j]), (xi[j].copy(), zeta[j].copy())
        done += k
    return QuadReport(samples=samples, violations=bad, worst_margin=worst, worst_pair=worst_pair)


@dataclass
class LipschitzReport:
    bound: float  # provable: ||D||_2 + ||T||_2
    pattern_norms: dict  # ||-D + T diag(s)||_2 for each slope pattern s in {0,1}^n
    pattern_max: float
    one_sided: float  # max over patterns of lambda_max of the symmetric part


def lipschitz_bound(params=None):
    """Global Lipschitz bound for ``-D x + T g(x)``.

    ``g`` is 1-Lipschitz componentwise, so ``||D||_2 + ||T||_2`` is safe. The
    per-pattern spectral norms and the one-sided constant (largest symmetric
    Jacobian eigenvalue over the vertex patterns) are returned as diagnostics.
    """
    params = params or CnnParams()
    D, T = np.asarray(params.D, float), np.asarray(params.T, float)
    n = D.shape[0]
    bound = float(np.linalg.norm(D, 2) + np.linalg.norm(T, 2))
    norms, one_sided = {}, -np.inf
    for pat in itertools.product((0, 1), repeat=n):
        J = -D + T @ np.diag(pat)
        norms[pat] = float(np.linalg.norm(J, 2))
        one_sided = max(one_sided, float(np.linalg.eigvalsh(0.5 * (J + J.T))[-1]))
    return LipschitzReport(bound=bound, pattern_norms=norms, pattern_max=max(norms.values()), one_sided=one_sided)
