"""Built-in network instances: five-state slow-switching family and the mobile-agent setup."""

import numpy as np

# embedded jump chain of the five-state example (named P here; T is the CNN weight matrix)
SLOW_EMBEDDED = np.array(
    [
        [0.0, 0.65, 0.0, 0.35, 0.0],
        [0.0, 0.0, 0.7, 0.0, 0.3],
        [0.0, 0.1, 0.0, 0.9, 0.0],
        [0.4, 0.6, 0.0, 0.0, 0.0],
        [0.0, 0.3, 0.0, 0.7, 0.0],
    ]
)

SLOW_L = [
    np.array([[-3, 0, 1, 1, 1], [0, -2, 0, 1, 1], [1, 1, -3, 0, 1], [0, 0, 0, -1, 1], [1, 1, 0, 0, -2]], float),
    np.array([[-2, 0, 0, 1, 1], [1, -2, 0, 0, 1], [0, 1, -2, 0, 1], [0, 1, 0, -2, 1], [0, 0, 0, 1, -1]], float),
    np.array([[-3, 0, 1, 1, 1], [1, -1, 0, 0, 0], [1, 0, -2, 0, 1], [0, 0, 0, -1, 1], [1, 1, 1, 1, -4]], float),
    np.array([[-2, 1, 0, 0, 1], [1, -2, 0, 0, 1], [0, 1, -3, 1, 1], [0, 1, 1, -2, 0], [1, 0, 0, 1, -2]], float),
    np.array([[-2, 1, 1, 0, 0], [0, -3, 1, 1, 1], [1, 1, -4, 1, 1], [0, 1, 1, -3, 1], [0, 1, 1, 1, -3]], float),
]

SLOW_C = [
    np.diag([1.0, 1, 0, 0, 1]),
    np.diag([1.0, 1, 1, 1, 1]),
    np.diag([0.0, 0, 0, 1, 1]),
    np.diag([0.0, 1, 0, 1, 0]),
    np.diag([1.0, 1, 1, 0, 0]),
]

SLOW_ALPHA, SLOW_BETA = 1.0, 0.5
SLOW_KAPPA, SLOW_EPS = 10.0, 1.0
SLOW_STEP = 0.01
SLOW_RATE_MAX = 0.75

MOBILE_KAPPA, MOBILE_EPS = 0.5, 12.0
MOBILE_STEP = 1e-4
MOBILE_LF = 4.68
MOBILE_R_STEPS = 750
MOBILE_DELTA = 4e-4
# reported constants for the mobile example: K1 - K3, K4, rho
MOBILE_REPORTED = {"K1_minus_K3": 1.0, "K4": 2500.0, "rho": 33.0}


def slow_topology():
    from .switchnet import SwitchedTopology

    return SwitchedTopology([L.copy() for L in SLOW_L], [C.copy() for C in SLOW_C])
