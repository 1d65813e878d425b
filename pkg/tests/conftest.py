"""Shared oracle helpers for the test suite.

The dual-signal timing-factor oracle deliberately avoids the closed form: it
evaluates the underlying observation integral by numeric quadrature and
minimizes over the time offset numerically, so it checks the implementation
through an independent route.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar


def ct_dual_numeric_oracle(t1: float, t2: float, t_pause: float) -> float:
    """Timing factor of a two-part signal via numeric integration.

    12 * min_t0 [ int_0^T1 (t-t0)^2 dt + int_{T1+Tp}^{T1+Tp+T2} (t-t0)^2 dt ].
    """
    delta = t1 + t_pause

    def objective(t0):
        first, _ = quad(lambda t: (t - t0) ** 2, 0.0, t1)
        second, _ = quad(lambda t: (t - t0) ** 2, delta, delta + t2)
        return first + second

    result = minimize_scalar(objective, bounds=(0.0, t1 + t_pause + t2),
                             method="bounded", options={"xatol": 1e-15})
    return 12.0 * result.fun


def merged_runs(states) -> list[tuple[int, int]]:
    """Collapse a per-interval state array into (state, run length) pairs."""
    states = np.asarray(states)
    runs = []
    current = int(states[0])
    length = 0
    for s in states:
        if int(s) == current:
            length += 1
        else:
            runs.append((current, length))
            current, length = int(s), 1
    runs.append((current, length))
    return runs
