"""Quick oracle checks run by ``icovsynth --seed-check``.

Each check compares the package against something computed independently:
SciPy's Riccati solver, closed forms, or matrix exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .lti import StateSpace, default_grid, freq_response
from .matkernel import care, care_residual
from .plants import LCLParams, lcl_current_plant, lcl_resonance
from .sim import Scenario, Segment, SignalSpec, simulate

__all__ = ["CheckResult", "run_all", "random_stabilizable"]


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def random_stabilizable(rng: np.random.Generator, n: int, m: int):
    """Random ``(A, B, Q, R)`` with ``(A, B)`` controllable and ``Q > 0``."""
    while True:
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.matrix_rank(ctrb) == n and np.linalg.cond(ctrb) < 1e8:
            break
    Cq = rng.standard_normal((n, n))
    Q = Cq @ Cq.T + 0.1 * np.eye(n)
    Rr = rng.standard_normal((m, m))
    R = Rr @ Rr.T + 0.5 * np.eye(m)
    return A, B, Q, R


def _care_vs_scipy(seed: int = 0, count: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, n + 1))
        A, B, Q, R = random_stabilizable(rng, n, m)
        X = care(A, B, Q, R)
        Xs = sla.solve_continuous_are(A, B, Q, R)
        worst = max(worst, np.linalg.norm(X - Xs) / max(1.0, np.linalg.norm(Xs)))
    return CheckResult("care matches scipy", worst < 1e-8, f"max relative difference {worst:.2e}")


def _care_scalar() -> CheckResult:
    worst = 0.0
    for a, b, q, r in [(1.0, 1.0, 1.0, 1.0), (-2.0, 0.5, 3.0, 2.0), (0.0, 1.0, 4.0, 1.0)]:
        x = (a * r + math.sqrt(a * a * r * r + b * b * q * r)) / (b * b)
        X = care([[a]], [[b]], [[q]], [[r]])
        worst = max(worst, abs(X[0, 0] - x) / max(1.0, x))
        worst = max(worst, float(np.abs(care_residual([[a]], [[b]], [[q]], [[r]], X)).max()))
    return CheckResult("scalar care closed form", worst < 1e-10, f"max error {worst:.2e}")


def _rk4_order() -> CheckResult:
    A = np.array([[0.0, 1.0], [-4.0, -0.4]])
    g = StateSpace(A, [[0.0], [1.0]], np.eye(2), np.zeros((2, 1)), ["w"], ["x1", "x2"])
    sc = lambda dt: Scenario((Segment(0.0, {"w": SignalSpec.constant(0.0)}),), t_end=1.0, dt=dt, record_dt=0.05)  # noqa: E731
    x0 = np.array([1.0, 0.0])
    ref = sla.expm(A) @ x0
    errs = []
    for dt in (0.025, 0.0125):
        tr = simulate(g, sc(dt), x0=x0)
        errs.append(np.linalg.norm([tr["x1"][-1] - ref[0], tr["x2"][-1] - ref[1]]))
    ratio = errs[0] / errs[1]
    return CheckResult("RK4 fourth-order convergence", ratio >= 8.0, f"error ratio on dt halving {ratio:.2f}")


def _lcl_peak() -> CheckResult:
    p = LCLParams(R1=0.0, R2=0.0)
    w0 = lcl_resonance(p)
    g = lcl_current_plant(p).subsystem(inputs=["u"])
    omega = default_grid(w0 / 3, w0 * 3, 2000)
    fr = freq_response(g, omega)
    mag = np.where(fr.valid, np.abs(fr.values[:, 0, 0]), -np.inf)
    peak = omega[int(np.argmax(mag))]
    err = abs(peak - w0) / w0
    return CheckResult("LCL resonance at the response peak", err < 0.01, f"relative offset {err:.2e}")


def run_all() -> list[CheckResult]:
    return [_care_scalar(), _care_vs_scipy(), _rk4_order(), _lcl_peak()]
