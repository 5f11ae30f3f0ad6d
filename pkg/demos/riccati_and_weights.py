"""Riccati solves and the weighting functions used by the synthesis.

Run: python demos/riccati_and_weights.py
"""

import math

import numpy as np
import scipy.linalg as sla

from icovsynth.lti import freq_response, tf_to_ss
from icovsynth.matkernel import care, care_residual
from icovsynth.weights import (
    ResonantSectionParams,
    SensWeightParams,
    resonant_section,
    w_d_lowpass,
    w_s1_first_order,
    w_u_from_corners,
    w_u,
)

# A badly scaled two-state plant: henries and farads in one matrix.
A = np.array([[-100.0, -1e3], [4e4, 0.0]])
B = np.array([[1e3], [0.0]])
Q, R = np.eye(2), np.eye(1)
X = care(A, B, Q, R)
print("CARE solution:\n", X)
print("residual norm:", np.linalg.norm(care_residual(A, B, Q, R, X)))
print("difference from scipy:", np.linalg.norm(X - sla.solve_continuous_are(A, B, Q, R)))

ws = w_s1_first_order(SensWeightParams(M_s=2.0, omega_b=2 * math.pi * 100, eps=1e-3))
wu = w_u(w_u_from_corners(0.01, 100.0, 1e6))
notch = resonant_section(ResonantSectionParams(omega_0=2 * math.pi * 60, zeta_num=1.0, zeta_den=1e-3))
wd = w_d_lowpass(3147.0)

omega = np.array([1.0, 377.0, 3147.0, 1e5])
for name, w in (("W_s1", ws), ("W_u", wu), ("60 Hz peak", notch), ("W_d", wd)):
    mag = np.abs(freq_response(tf_to_ss(w), omega).values[:, 0, 0])
    print(f"{name:>10}: " + "  ".join(f"|W(j{x:g})|={m:.4g}" for x, m in zip(omega, mag)))
