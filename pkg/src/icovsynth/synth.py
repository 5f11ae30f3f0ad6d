"""Mixed-sensitivity H-infinity synthesis and the inverse-based PI baseline.

The synthesis is the classical two-Riccati (Glover-Doyle) solution for a
general ``D11``: the plant is normalized so that ``D12 = [0; I]`` and
``D21 = [0, I]``, feasibility at a given level ``gamma`` is decided by the
two Riccati equations and the coupling condition, and the smallest
feasible level is located by bisection in ``log(gamma)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .lti import (
    GeneralizedPlant,
    RationalTF,
    StateSpace,
    append,
    as_ss,
    feedback,
    hinf_norm,
    is_stable,
    lft,
    series,
    static_gain,
)
from .matkernel import DEFAULT_CONFIG, NumericConfig, RiccatiError, stabilizing_solution
from .weights import Weight, WeightCase

__all__ = [
    "SynthesisError",
    "HinfInfeasibleError",
    "CertificationError",
    "NotStabilizableError",
    "GammaTrial",
    "SynthesisResult",
    "augment_with_weights",
    "augment_with_case",
    "regularize",
    "hinf_synthesize",
    "gamma_feasible",
    "pi_inverse_design",
    "sensitivity_set",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = 1e-4


class SynthesisError(RuntimeError):
    """Base class for synthesis failures."""


class HinfInfeasibleError(SynthesisError):
    """No level in the search range admits a controller."""


class CertificationError(SynthesisError):
    """The closed loop does not meet the level the synthesis claimed."""


class NotStabilizableError(SynthesisError):
    """``(A, B2)`` is not stabilizable or ``(C2, A)`` is not detectable."""


# --- generalized plant assembly ---------------------------------------------


def _weight_ss(w, label: str) -> StateSpace:
    if isinstance(w, Weight):
        return w.to_ss(label, label)
    return as_ss(w).relabel([label], [label])


def augment_with_weights(
    plant: GeneralizedPlant,
    W_s: Optional[Mapping[str, object]] = None,
    W_u: Optional[Mapping[str, object]] = None,
    W_d: Optional[Mapping[str, object]] = None,
) -> GeneralizedPlant:
    """Wrap a generalized plant with weighting functions.

    Parameters
    ----------
    plant
        Unweighted generalized plant.
    W_s, W_u
        Mappings from regulated-output label to weight (error channels and
        control-effort channels respectively). A weight may be a
        :class:`~icovsynth.weights.Weight`, a ``RationalTF``, a SISO
        ``StateSpace`` or a scalar.
    W_d
        Mapping from exogenous-input label to weight.

    Channels without a weight pass through unchanged. The state dimension of
    the result is the plant's plus the orders of all weights.
    """
    out_w = {**(W_s or {}), **(W_u or {})}
    in_w = dict(W_d or {})
    unknown = (set(out_w) - set(plant.z_labels)) | (set(in_w) - set(plant.w_labels))
    if unknown:
        raise ValueError(f"weights given for unknown channels: {sorted(unknown)}")
    for w in list(out_w.values()) + list(in_w.values()):
        g = _weight_ss(w, "x")
        if not g.D.size or not is_stable(g):
            raise ValueError("weights must be proper and stable")
    ident = lambda lab: static_gain([[1.0]], [lab], [lab])  # noqa: E731
    w_in = append(
        *[_weight_ss(in_w[lab], lab) if lab in in_w else ident(lab) for lab in plant.w_labels],
        *[ident(lab) for lab in plant.u_labels],
    )
    w_out = append(
        *[_weight_ss(out_w[lab], lab) if lab in out_w else ident(lab) for lab in plant.z_labels],
        *[ident(lab) for lab in plant.y_labels],
    )
    sys = series(series(w_in, plant.sys), w_out)
    return GeneralizedPlant(sys, plant.n_w, plant.n_u, plant.n_z, plant.n_y)


def augment_with_case(plant: GeneralizedPlant, case: WeightCase) -> GeneralizedPlant:
    """Same as :func:`augment_with_weights` with the channels of a weight case."""
    return augment_with_weights(plant, W_s=case.output_weights, W_d=case.input_weights)


def _unreached_modes(A: np.ndarray, B1: np.ndarray) -> bool:
    """True when some mode of ``A`` is uncontrollable from ``B1`` (PBH test)."""
    n = A.shape[0]
    if n == 0:
        return False
    scale = max(1.0, np.linalg.norm(A))
    for mu in np.linalg.eigvals(A):
        if np.linalg.matrix_rank(np.hstack([A - mu * np.eye(n), B1]), tol=1e-10 * scale) < n:
            return True
    return False


def regularize(plant: GeneralizedPlant, delta: float = DEFAULT_DELTA, input_noise: bool = False):
    """Make ``D12`` full column rank and ``D21`` full row rank.

    Adds a regulated output ``delta * u`` when ``D12`` is rank deficient and
    measurement-noise inputs of size ``delta`` on the measurement channels
    that have no feedthrough from ``w``. With ``input_noise`` set, a
    disturbance of size ``delta`` at the control input is also added when
    some mode is unreachable from ``w``; otherwise the estimator treats such
    states as exactly known and ignores their measurements.

    Returns
    -------
    (GeneralizedPlant, dict)
        Regularized plant and a record of what was added.
    """
    A, B1, B2, C1, C2, D11, D12, D21, D22 = plant.blocks()
    n = A.shape[0]
    nw, nu, ny = plant.n_w, plant.n_u, plant.n_y
    notes = {"delta": delta, "control_outputs": [], "noise_inputs": [], "input_disturbances": []}
    tol = 1e-12
    if np.linalg.matrix_rank(D12, tol=tol) < nu:
        C1 = np.vstack([C1, np.zeros((nu, n))])
        D11 = np.vstack([D11, np.zeros((nu, nw))])
        D12 = np.vstack([D12, delta * np.eye(nu)])
        notes["control_outputs"] = [f"reg_{lab}" for lab in plant.u_labels]
    new_w = []
    if input_noise and _unreached_modes(A, B1):
        B1 = np.hstack([B1, delta * B2])
        D11 = np.hstack([D11, np.zeros((D11.shape[0], nu))])
        D21 = np.hstack([D21, delta * D22])
        notes["input_disturbances"] = [f"dist_{lab}" for lab in plant.u_labels]
        new_w += notes["input_disturbances"]
    if np.linalg.matrix_rank(D21, tol=tol) < ny:
        rows = [k for k in range(ny) if np.linalg.norm(D21[k]) <= tol]
        E = np.zeros((ny, len(rows)))
        for j, k in enumerate(rows):
            E[k, j] = delta
        if np.linalg.matrix_rank(np.hstack([D21, E]), tol=tol) < ny:
            rows = list(range(ny))
            E = delta * np.eye(ny)
        B1 = np.hstack([B1, np.zeros((n, len(rows)))])
        D11 = np.hstack([D11, np.zeros((D11.shape[0], len(rows)))])
        D21 = np.hstack([D21, E])
        notes["noise_inputs"] = [f"noise_{plant.y_labels[k]}" for k in rows]
        new_w += notes["noise_inputs"]
    nz2 = C1.shape[0]
    nw2 = B1.shape[1]
    sys = StateSpace(
        A,
        np.hstack([B1, B2]),
        np.vstack([C1, C2]),
        np.block([[D11, D12], [D21, np.zeros((ny, nu)) + D22]]),
        list(plant.w_labels) + new_w + list(plant.u_labels),
        list(plant.z_labels) + notes["control_outputs"] + list(plant.y_labels),
    )
    return GeneralizedPlant(sys, nw2, nu, nz2, ny), notes


# --- normalization ------------------------------------------------------------


@dataclass
class _Normalized:
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    D11: np.ndarray
    D22: np.ndarray
    Tu: np.ndarray
    Ty: np.ndarray

    @property
    def dims(self):
        return self.B1.shape[1], self.B2.shape[1], self.C1.shape[0], self.C2.shape[0]


def _normalize(plant: GeneralizedPlant) -> _Normalized:
    A, B1, B2, C1, C2, D11, D12, D21, D22 = plant.blocks()
    nw, nu, nz, ny = plant.n_w, plant.n_u, plant.n_z, plant.n_y
    if nz < nu or nw < ny:
        raise SynthesisError("need at least as many regulated outputs as controls and "
                             "as many exogenous inputs as measurements")
    U, s, Vt = np.linalg.svd(D12)
    if s.size < nu or s.min() <= 1e-12 * max(1.0, s.max()):
        raise SynthesisError("D12 must have full column rank")
    Tu = Vt.T / s
    Theta_z = np.vstack([U[:, nu:].T, U[:, :nu].T])
    U2, s2, V2t = np.linalg.svd(D21)
    if s2.size < ny or s2.min() <= 1e-12 * max(1.0, s2.max()):
        raise SynthesisError("D21 must have full row rank")
    Ty = (U2 / s2).T
    Theta_w = np.hstack([V2t[ny:].T, V2t[:ny].T])
    return _Normalized(
        A=A,
        B1=B1 @ Theta_w,
        B2=B2 @ Tu,
        C1=Theta_z @ C1,
        C2=Ty @ C2,
        D11=Theta_z @ D11 @ Theta_w,
        D22=Ty @ D22 @ Tu,
        Tu=Tu,
        Ty=Ty,
    )


# --- gamma test and central controller -------------------------------------


class _Infeasible(Exception):
    pass


def _d11_bound(N: _Normalized) -> float:
    nw, nu, nz, ny = N.dims
    D = N.D11
    top = D[: nz - nu, :]  # [D1111 D1112]
    left = D[:, : nw - ny]  # [D1111; D1121]
    b1 = np.linalg.norm(top, 2) if top.size else 0.0
    b2 = np.linalg.norm(left, 2) if left.size else 0.0
    return max(b1, b2)


def _psd(X: np.ndarray, tol: float) -> bool:
    if X.size == 0:
        return True
    return np.linalg.eigvalsh(X).min() >= -tol * max(1.0, np.linalg.norm(X, 2))


def _riccati_pair(N: _Normalized, gamma: float, config: NumericConfig):
    nw, nu, nz, ny = N.dims
    A, B1, B2, C1, C2, D11 = N.A, N.B1, N.B2, N.C1, N.C2, N.D11
    n = A.shape[0]
    if gamma <= _d11_bound(N) * (1.0 + 1e-9):
        raise _Infeasible("gamma below the D11 bound")
    g2 = gamma * gamma
    B = np.hstack([B1, B2])
    D1 = np.hstack([D11, np.vstack([np.zeros((nz - nu, nu)), np.eye(nu)])])
    R = D1.T @ D1 - np.diag(np.r_[np.full(nw, g2), np.zeros(nu)])
    Ri_x = np.linalg.inv(R)
    Cc = np.vstack([C1, C2])
    Dc = np.vstack([D11, np.hstack([np.zeros((ny, nw - ny)), np.eye(ny)])])
    Rt = Dc @ Dc.T - np.diag(np.r_[np.full(nz, g2), np.zeros(ny)])
    Ri_y = np.linalg.inv(Rt)

    Sx = C1.T @ D1  # cross term
    Ax = A - B @ Ri_x @ Sx.T
    Hx = np.block(
        [
            [Ax, -B @ Ri_x @ B.T],
            [-(C1.T @ C1 - Sx @ Ri_x @ Sx.T), -Ax.T],
        ]
    )
    Sy = B1 @ Dc.T
    Ay = A.T - Cc.T @ Ri_y @ Sy.T
    Hy = np.block(
        [
            [Ay, -Cc.T @ Ri_y @ Cc],
            [-(B1 @ B1.T - Sy @ Ri_y @ Sy.T), -Ay.T],
        ]
    )
    try:
        X = stabilizing_solution(Hx, config)
    except RiccatiError as exc:
        raise _Infeasible(f"X-Riccati: {exc}") from None
    if not _psd(X, config.psd_tol):
        raise _Infeasible("X not positive semidefinite")
    try:
        Y = stabilizing_solution(Hy, config)
    except RiccatiError as exc:
        raise _Infeasible(f"Y-Riccati: {exc}") from None
    if not _psd(Y, config.psd_tol):
        raise _Infeasible("Y not positive semidefinite")
    rho = max(abs(np.linalg.eigvals(X @ Y))) if n else 0.0
    if rho >= g2:
        raise _Infeasible(f"coupling condition rho(XY)={rho:.6g} >= gamma^2")
    F = -Ri_x @ (Sx.T + B.T @ X)
    L = -(Sy + Y @ Cc.T) @ Ri_y
    return X, Y, F, L


def _central_controller(N: _Normalized, gamma: float, X, Y, F, L) -> StateSpace:
    nw, nu, nz, ny = N.dims
    A, B, C2 = N.A, np.hstack([N.B1, N.B2]), N.C2
    D11 = N.D11
    g2 = gamma * gamma
    r1 = nz - nu  # row split of D11
    c1 = nw - ny  # column split of D11
    D1111, D1112 = D11[:r1, :c1], D11[:r1, c1:]
    D1121, D1122 = D11[r1:, :c1], D11[r1:, c1:]
    F1, F2 = F[:nw], F[nw:]
    F12 = F1[c1:]
    L1, L2 = L[:, :nz], L[:, nz:]
    L12 = L1[:, r1:]

    G1 = np.linalg.inv(g2 * np.eye(r1) - D1111 @ D1111.T) if r1 else np.zeros((0, 0))
    G2 = np.linalg.inv(g2 * np.eye(c1) - D1111.T @ D1111) if c1 else np.zeros((0, 0))
    Dk11 = -D1121 @ D1111.T @ G1 @ D1112 - D1122 if r1 else -D1122
    M12 = np.eye(nu) - (D1121 @ G2 @ D1121.T if c1 else 0.0)
    M21 = np.eye(ny) - (D1112.T @ G1 @ D1112 if r1 else 0.0)
    Dk12 = np.linalg.cholesky(0.5 * (M12 + M12.T))
    Dk21 = np.linalg.cholesky(0.5 * (M21 + M21.T)).T

    n = A.shape[0]
    Zinv = np.eye(n) - Y @ X / g2
    Z = np.linalg.inv(Zinv)
    Bk2 = Z @ (N.B2 + L12) @ Dk12
    Ck2 = -Dk21 @ (C2 + F12)
    Bk1 = -Z @ L2 + Bk2 @ np.linalg.solve(Dk12, Dk11)
    Ck1 = F2 + Dk11 @ np.linalg.solve(Dk21, Ck2)
    Ak = A + B @ F + Bk1 @ np.linalg.solve(Dk21, Ck2)
    return StateSpace(Ak, Bk1, Ck1, Dk11)


def _unnormalize(K0: StateSpace, N: _Normalized, labels_in, labels_out) -> StateSpace:
    if np.any(N.D22):
        K0 = feedback(K0, static_gain(N.D22), sign=-1)
    return StateSpace(K0.A, K0.B @ N.Ty, N.Tu @ K0.C, N.Tu @ K0.D @ N.Ty, labels_in, labels_out)


@dataclass
class GammaTrial:
    gamma: float
    feasible: bool
    reason: str = ""


def _check_stabilizable(plant: GeneralizedPlant) -> None:
    A, _, B2, _, C2, *_ = plant.blocks()
    n = A.shape[0]
    if n == 0:
        return
    lam = np.linalg.eigvals(A)
    scale = max(1.0, np.linalg.norm(A))
    for mu in lam[lam.real >= -1e-12 * scale]:
        M = A - mu * np.eye(n)
        tol = 1e-10 * scale
        if np.linalg.matrix_rank(np.hstack([M, B2]), tol=tol) < n:
            raise NotStabilizableError(f"mode {mu:.6g} is not stabilizable from u")
        if np.linalg.matrix_rank(np.vstack([M, C2]), tol=tol) < n:
            raise NotStabilizableError(f"mode {mu:.6g} is not detectable from y")


def gamma_feasible(plant: GeneralizedPlant, gamma: float, config: NumericConfig = DEFAULT_CONFIG) -> GammaTrial:
    """Decide whether ``gamma`` is achievable on an already regularized plant."""
    N = _normalize(GeneralizedPlant(plant.sys.balanced(), plant.n_w, plant.n_u, plant.n_z, plant.n_y))
    try:
        _riccati_pair(N, gamma, config)
    except _Infeasible as exc:
        return GammaTrial(gamma, False, str(exc))
    return GammaTrial(gamma, True)


@dataclass(eq=False)
class SynthesisResult:
    """Controller, achieved level and diagnostics of one synthesis."""

    K: StateSpace
    gamma: float
    iterations: list[GammaTrial]
    closed_loop: StateSpace
    achieved_norm: float
    plant: GeneralizedPlant
    regularization: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "achieved_norm": self.achieved_norm,
            "controller": {
                "A": self.K.A.tolist(),
                "B": self.K.B.tolist(),
                "C": self.K.C.tolist(),
                "D": self.K.D.tolist(),
                "input_labels": list(self.K.input_labels),
                "output_labels": list(self.K.output_labels),
            },
            "bisection": [
                {"gamma": t.gamma, "feasible": t.feasible, "reason": t.reason} for t in self.iterations
            ],
            "regularization": self.regularization,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def controller_from_dict(doc: Mapping) -> StateSpace:
    c = doc["controller"]
    return StateSpace(c["A"], c["B"], c["C"], c["D"], c["input_labels"], c["output_labels"])


def hinf_synthesize(
    P: GeneralizedPlant,
    gamma_range: tuple[float, float] = (1e-2, 1e4),
    rel_tol: float = 1e-3,
    delta: float = DEFAULT_DELTA,
    cert_tol: float = 0.01,
    config: NumericConfig = DEFAULT_CONFIG,
    input_noise: bool = False,
) -> SynthesisResult:
    """Central H-infinity controller at the smallest feasible level.

    The level is bisected in ``log(gamma)`` over ``gamma_range`` until the
    bracket is narrower than ``rel_tol``. The controller is built at the
    feasible end of the bracket and the closed loop is checked for internal
    stability and ``||F_l(P, K)||_inf <= gamma * (1 + cert_tol)``.

    ``delta`` and ``input_noise`` are passed to :func:`regularize`; the
    returned closed loop is that of the regularized plant.

    Raises
    ------
    NotStabilizableError
        ``(A, B2)`` not stabilizable or ``(C2, A)`` not detectable.
    HinfInfeasibleError
        Infeasible even at the top of ``gamma_range``.
    CertificationError
        The constructed closed loop is unstable or exceeds the claimed level.
    """
    Preg, notes = regularize(P, delta, input_noise)
    _check_stabilizable(Preg)
    bal = GeneralizedPlant(Preg.sys.balanced(), Preg.n_w, Preg.n_u, Preg.n_z, Preg.n_y)
    N = _normalize(bal)
    log: list[GammaTrial] = []

    def trial(g):
        try:
            sol = _riccati_pair(N, g, config)
        except _Infeasible as exc:
            log.append(GammaTrial(g, False, str(exc)))
            return None
        log.append(GammaTrial(g, True))
        return sol

    lo, hi = gamma_range
    best = trial(hi)
    if best is None:
        raise HinfInfeasibleError(f"infeasible at gamma={hi:g}: {log[-1].reason}")
    best_gamma = hi
    sol_lo = trial(lo)
    if sol_lo is not None:
        best, best_gamma = sol_lo, lo
    else:
        while hi / lo - 1.0 > rel_tol:
            mid = math.sqrt(lo * hi)
            sol = trial(mid)
            if sol is None:
                lo = mid
            else:
                hi, best, best_gamma = mid, sol, mid
    K0 = _central_controller(N, best_gamma, *best)
    K = _unnormalize(K0, N, P.y_labels, P.u_labels)
    cl = lft(Preg.sys, K, Preg.n_u, Preg.n_y)
    if not is_stable(cl):
        raise CertificationError(f"closed loop unstable at gamma={best_gamma:.6g}")
    achieved = hinf_norm(cl)
    if achieved > best_gamma * (1.0 + cert_tol):
        raise CertificationError(
            f"closed-loop norm {achieved:.6g} exceeds gamma={best_gamma:.6g}"
        )
    return SynthesisResult(
        K=K,
        gamma=best_gamma,
        iterations=log,
        closed_loop=cl,
        achieved_norm=achieved,
        plant=Preg,
        regularization=notes,
    )


# --- classical baseline and closed-loop maps ----------------------------------


def pi_inverse_design(G_p: RationalTF, omega_bw: float) -> RationalTF:
    """``G_c = (omega_bw/s) G_p^{-1}`` for a first-order lag plant.

    For ``G_p = 1/(sL + R)`` the result is ``omega_bw*L + omega_bw*R/s``.
    """
    if G_p.order != 1 or not G_p.is_strictly_proper or G_p.num.size != 1:
        raise ValueError("pi_inverse_design needs a first-order plant b/(a1 s + a0)")
    if G_p.poles()[0].real >= 0:
        raise ValueError("plant pole must be stable")
    if not omega_bw > 0:
        raise ValueError("omega_bw must be positive")
    b = G_p.num[0]
    a1, a0 = G_p.den
    return RationalTF([omega_bw * a1 / b, omega_bw * a0 / b], [1.0, 0.0])


def sensitivity_set(G: StateSpace, K: StateSpace, G_d: Optional[StateSpace] = None):
    """Closed-loop maps ``(S, T, G_d S)`` of the loop ``G K`` under negative feedback."""
    L = series(K, G)
    I = static_gain(np.eye(L.n_outputs), L.output_labels, L.output_labels)
    S = feedback(I, L, sign=-1)
    T = feedback(L, I, sign=-1)
    GdS = series(G_d, S) if G_d is not None else None
    return S, T, GdS
