"""Continuous-time LTI systems: realizations, interconnections and frequency-domain queries.

Transfer functions are kept as coefficient vectors only until they are
realized; all composition happens in state space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .matkernel import as_matrix

__all__ = [
    "BEYOND_GRID",
    "AlgebraicLoopError",
    "UnstableSystemError",
    "RationalTF",
    "StateSpace",
    "GeneralizedPlant",
    "FreqResponse",
    "default_grid",
    "tf_to_ss",
    "as_ss",
    "static_gain",
    "series",
    "parallel",
    "feedback",
    "append",
    "lft",
    "ss_inverse",
    "freq_response",
    "is_stable",
    "bandwidth_3db",
    "crossover_frequency",
    "hinf_norm",
]

#: Returned by :func:`bandwidth_3db` when the response never drops 3 dB on the grid.
BEYOND_GRID = math.inf


class AlgebraicLoopError(ValueError):
    """An interconnection has an ill-posed (non-invertible) direct feedthrough loop."""


class UnstableSystemError(ValueError):
    """An operation that needs a stable system was given an unstable one."""


def _poly(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("polynomial coefficients must be a non-empty vector")
    nz = np.flatnonzero(c)
    return c[nz[0] :] if nz.size else np.zeros(1)


@dataclass(frozen=True, eq=False)
class RationalTF:
    """SISO rational transfer function ``num(s)/den(s)`` (descending powers)."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num, den = _poly(self.num), _poly(self.den)
        if den[0] == 0.0:
            raise ValueError("denominator must be nonzero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def constant(cls, k: float) -> "RationalTF":
        return cls([k], [1.0])

    @property
    def order(self) -> int:
        return self.den.size - 1

    @property
    def is_proper(self) -> bool:
        return self.num.size <= self.den.size

    @property
    def is_strictly_proper(self) -> bool:
        return self.num.size < self.den.size or not np.any(self.num)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def __mul__(self, other):
        if isinstance(other, RationalTF):
            return RationalTF(np.convolve(self.num, other.num), np.convolve(self.den, other.den))
        return RationalTF(self.num * float(other), self.den)

    __rmul__ = __mul__

    def poles(self) -> np.ndarray:
        return np.roots(self.den)

    def zeros(self) -> np.ndarray:
        return np.roots(self.num)

    def dc_gain(self) -> float:
        return float(self.num[-1] / self.den[-1]) if self.den[-1] != 0 else math.inf

    def hf_gain(self) -> float:
        """Limit of ``|g(jw)|`` as ``w -> inf`` (finite only for proper ``g``)."""
        if self.num.size < self.den.size:
            return 0.0
        if self.num.size > self.den.size:
            return math.inf
        return float(abs(self.num[0] / self.den[0]))

    def __repr__(self) -> str:
        return f"RationalTF(num={self.num.tolist()}, den={self.den.tolist()})"


def _labels(labels, count: int, prefix: str) -> tuple[str, ...]:
    if labels is None:
        return tuple(f"{prefix}{k}" for k in range(count))
    if isinstance(labels, str):
        labels = [labels]
    labels = tuple(str(x) for x in labels)
    if len(labels) != count:
        raise ValueError(f"expected {count} {prefix}-labels, got {len(labels)}")
    return labels


@dataclass(eq=False)
class StateSpace:
    """Dense realization ``x' = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_labels: tuple[str, ...] = field(default=None)
    output_labels: tuple[str, ...] = field(default=None)

    def __post_init__(self):
        D = as_matrix(self.D, "D")
        A = np.array(self.A, dtype=float)
        n = 0 if A.size == 0 else A.shape[0]
        A = A.reshape(n, n)
        p, m = D.shape
        B = np.array(self.B, dtype=float).reshape(n, m)
        C = np.array(self.C, dtype=float).reshape(p, n)
        for name, M in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        self.A, self.B, self.C, self.D = A, B, C, D
        self.input_labels = _labels(self.input_labels, m, "u")
        self.output_labels = _labels(self.output_labels, p, "y")

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @property
    def is_siso(self) -> bool:
        return self.D.shape == (1, 1)

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n_states else np.zeros(0, complex)

    def evaluate(self, s: complex) -> np.ndarray:
        """Transfer matrix ``C (sI - A)^{-1} B + D`` at one complex point."""
        if self.n_states == 0:
            return self.D.astype(complex)
        X = np.linalg.solve(s * np.eye(self.n_states) - self.A, self.B)
        return self.C @ X + self.D

    def dc_gain(self) -> np.ndarray:
        return self.evaluate(0.0).real

    def _index(self, keys, labels: tuple[str, ...]) -> list[int]:
        if keys is None:
            return list(range(len(labels)))
        if isinstance(keys, (str, int, np.integer)):
            keys = [keys]
        return [labels.index(k) if isinstance(k, str) else int(k) for k in keys]

    def subsystem(self, outputs=None, inputs=None) -> "StateSpace":
        """Select outputs and inputs by label or index (states are kept)."""
        oi = self._index(outputs, self.output_labels)
        ii = self._index(inputs, self.input_labels)
        return StateSpace(
            self.A,
            self.B[:, ii],
            self.C[oi, :],
            self.D[np.ix_(oi, ii)],
            [self.input_labels[k] for k in ii],
            [self.output_labels[k] for k in oi],
        )

    def relabel(self, inputs=None, outputs=None) -> "StateSpace":
        return StateSpace(
            self.A,
            self.B,
            self.C,
            self.D,
            self.input_labels if inputs is None else inputs,
            self.output_labels if outputs is None else outputs,
        )

    def similarity(self, T: np.ndarray) -> "StateSpace":
        """Realization in coordinates ``x = T xi``."""
        Ti = np.linalg.inv(T)
        return StateSpace(
            Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D, self.input_labels, self.output_labels
        )

    def balanced(self) -> "StateSpace":
        """Diagonal state scaling that equilibrates the rows and columns of A."""
        if self.n_states == 0:
            return self
        from scipy.linalg import matrix_balance

        _, (scale, _) = matrix_balance(self.A, permute=False, separate=True)
        return self.similarity(np.diag(scale))

    def __neg__(self) -> "StateSpace":
        return StateSpace(self.A, self.B, -self.C, -self.D, self.input_labels, self.output_labels)

    def scaled(self, k: float) -> "StateSpace":
        """Output scaled by the static gain ``k``."""
        return StateSpace(self.A, self.B, k * self.C, k * self.D, self.input_labels, self.output_labels)

    def __repr__(self) -> str:
        return (
            f"StateSpace(n={self.n_states}, inputs={list(self.input_labels)}, "
            f"outputs={list(self.output_labels)})"
        )


@dataclass(eq=False)
class GeneralizedPlant:
    """Partitioned plant with inputs ``[w | u]`` and outputs ``[z | y]``."""

    sys: StateSpace
    n_w: int
    n_u: int
    n_z: int
    n_y: int

    def __post_init__(self):
        if self.n_w + self.n_u != self.sys.n_inputs:
            raise ValueError("n_w + n_u must equal the number of plant inputs")
        if self.n_z + self.n_y != self.sys.n_outputs:
            raise ValueError("n_z + n_y must equal the number of plant outputs")

    @property
    def w_labels(self) -> tuple[str, ...]:
        return self.sys.input_labels[: self.n_w]

    @property
    def u_labels(self) -> tuple[str, ...]:
        return self.sys.input_labels[self.n_w :]

    @property
    def z_labels(self) -> tuple[str, ...]:
        return self.sys.output_labels[: self.n_z]

    @property
    def y_labels(self) -> tuple[str, ...]:
        return self.sys.output_labels[self.n_z :]

    def blocks(self):
        """``(A, B1, B2, C1, C2, D11, D12, D21, D22)``."""
        s, nw, nz = self.sys, self.n_w, self.n_z
        return (
            s.A,
            s.B[:, :nw],
            s.B[:, nw:],
            s.C[:nz],
            s.C[nz:],
            s.D[:nz, :nw],
            s.D[:nz, nw:],
            s.D[nz:, :nw],
            s.D[nz:, nw:],
        )


def static_gain(D, inputs=None, outputs=None) -> StateSpace:
    D = as_matrix(D, "D")
    return StateSpace(np.zeros((0, 0)), np.zeros((0, D.shape[1])), np.zeros((D.shape[0], 0)), D, inputs, outputs)


def tf_to_ss(g: RationalTF, input_label: str = "u0", output_label: str = "y0") -> StateSpace:
    """Controllable canonical realization of a proper SISO transfer function."""
    if not g.is_proper:
        raise ValueError("transfer function is improper")
    den = g.den / g.den[0]
    num = g.num / g.den[0]
    n = den.size - 1
    if n == 0:
        return static_gain([[num[0]]], [input_label], [output_label])
    num = np.concatenate([np.zeros(n + 1 - num.size), num])
    d = num[0]
    c = num[1:] - d * den[1:]
    A = np.zeros((n, n))
    A[0, :] = -den[1:]
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    return StateSpace(A, B, c.reshape(1, n), [[d]], [input_label], [output_label])


SystemLike = Union[StateSpace, RationalTF, float, int, Sequence]


def as_ss(g: SystemLike) -> StateSpace:
    """Coerce a StateSpace, RationalTF, scalar or sequence of SISO factors."""
    if isinstance(g, StateSpace):
        return g
    if isinstance(g, RationalTF):
        return tf_to_ss(g)
    if isinstance(g, (int, float, np.floating, np.integer)):
        return static_gain([[float(g)]])
    if isinstance(g, (list, tuple)):
        out = None
        for factor in g:
            f = as_ss(factor)
            out = f if out is None else series(out, f)
        return out if out is not None else static_gain([[1.0]])
    raise TypeError(f"cannot convert {type(g).__name__} to StateSpace")


def series(g1: StateSpace, g2: StateSpace) -> StateSpace:
    """``g2 * g1``: the output of ``g1`` drives ``g2``."""
    if g1.n_outputs != g2.n_inputs:
        raise ValueError(f"series: {g1.n_outputs} outputs cannot drive {g2.n_inputs} inputs")
    n1, n2 = g1.n_states, g2.n_states
    A = np.block([[g1.A, np.zeros((n1, n2))], [g2.B @ g1.C, g2.A]])
    B = np.vstack([g1.B, g2.B @ g1.D])
    C = np.hstack([g2.D @ g1.C, g2.C])
    return StateSpace(A, B, C, g2.D @ g1.D, g1.input_labels, g2.output_labels)


def parallel(g1: StateSpace, g2: StateSpace) -> StateSpace:
    """``g1 + g2`` with shared inputs and summed outputs."""
    if (g1.n_inputs, g1.n_outputs) != (g2.n_inputs, g2.n_outputs):
        raise ValueError("parallel: dimension mismatch")
    n1, n2 = g1.n_states, g2.n_states
    A = np.block([[g1.A, np.zeros((n1, n2))], [np.zeros((n2, n1)), g2.A]])
    return StateSpace(
        A,
        np.vstack([g1.B, g2.B]),
        np.hstack([g1.C, g2.C]),
        g1.D + g2.D,
        g1.input_labels,
        g1.output_labels,
    )


def append(*systems: StateSpace) -> StateSpace:
    """Block-diagonal stacking of independent systems."""
    from scipy.linalg import block_diag

    A = block_diag(*[g.A for g in systems]) if systems else np.zeros((0, 0))
    B = block_diag(*[g.B for g in systems])
    C = block_diag(*[g.C for g in systems])
    D = block_diag(*[g.D for g in systems])
    n = sum(g.n_states for g in systems)
    A = np.asarray(A).reshape(n, n)
    B = np.asarray(B).reshape(n, D.shape[1])
    C = np.asarray(C).reshape(D.shape[0], n)
    ins = [lab for g in systems for lab in g.input_labels]
    outs = [lab for g in systems for lab in g.output_labels]
    return StateSpace(A, B, C, D, ins, outs)


def _solve_loop(M: np.ndarray) -> np.ndarray:
    if M.size and np.linalg.cond(M) > 1e12:
        raise AlgebraicLoopError("feedback interconnection is ill-posed")
    return np.linalg.inv(M)


def feedback(g: StateSpace, h: StateSpace, sign: int = -1) -> StateSpace:
    """Closed loop of ``g`` with ``h`` in the feedback path.

    ``u = r + sign * h(y)``, ``y = g(u)``; the result maps ``r`` to ``y``.
    """
    if h.n_inputs != g.n_outputs or h.n_outputs != g.n_inputs:
        raise ValueError("feedback: dimension mismatch")
    s = float(sign)
    E = _solve_loop(np.eye(g.n_inputs) - s * h.D @ g.D)
    # u = E (r + s Dh Cg xg + s Ch xh)
    Ux = np.hstack([s * E @ h.D @ g.C, s * E @ h.C])
    Ur = E
    Cg_full = np.hstack([g.C, np.zeros((g.n_outputs, h.n_states))])
    Yx = Cg_full + g.D @ Ux
    Yr = g.D @ Ur
    ng, nh = g.n_states, h.n_states
    A = np.vstack(
        [
            np.hstack([g.A, np.zeros((ng, nh))]) + g.B @ Ux,
            np.hstack([np.zeros((nh, ng)), h.A]) + h.B @ Yx,
        ]
    )
    B = np.vstack([g.B @ Ur, h.B @ Yr])
    return StateSpace(A, B, Yx, Yr, g.input_labels, g.output_labels)


def lft(P: StateSpace, K: StateSpace, n_u: int, n_y: int) -> StateSpace:
    """Lower linear fractional transformation ``F_l(P, K)``.

    The last ``n_u`` inputs and last ``n_y`` outputs of ``P`` are closed
    through ``K`` (``n_y`` inputs, ``n_u`` outputs).
    """
    if (K.n_inputs, K.n_outputs) != (n_y, n_u):
        raise ValueError("lft: controller dimensions do not match n_y/n_u")
    nw = P.n_inputs - n_u
    nz = P.n_outputs - n_y
    A, B1, B2 = P.A, P.B[:, :nw], P.B[:, nw:]
    C1, C2 = P.C[:nz], P.C[nz:]
    D11, D12, D21, D22 = P.D[:nz, :nw], P.D[:nz, nw:], P.D[nz:, :nw], P.D[nz:, nw:]
    n, nk = P.n_states, K.n_states
    M = _solve_loop(np.eye(n_u) - K.D @ D22)
    Ux = M @ K.D @ C2
    Uk = M @ K.C
    Uw = M @ K.D @ D21
    Yx = C2 + D22 @ Ux
    Yk = D22 @ Uk
    Yw = D21 + D22 @ Uw
    Acl = np.block([[A + B2 @ Ux, B2 @ Uk], [K.B @ Yx, K.A + K.B @ Yk]])
    Bcl = np.vstack([B1 + B2 @ Uw, K.B @ Yw])
    Ccl = np.hstack([C1 + D12 @ Ux, D12 @ Uk])
    Dcl = D11 + D12 @ Uw
    Acl = Acl.reshape(n + nk, n + nk)
    return StateSpace(Acl, Bcl, Ccl, Dcl, P.input_labels[:nw], P.output_labels[:nz])


def ss_inverse(g: StateSpace) -> StateSpace:
    """Inverse of a square system with invertible feedthrough."""
    if g.n_inputs != g.n_outputs:
        raise ValueError("only square systems can be inverted")
    if np.linalg.cond(g.D) > 1e14:
        raise AlgebraicLoopError("feedthrough is singular; system has no proper inverse")
    Di = np.linalg.inv(g.D)
    return StateSpace(
        g.A - g.B @ Di @ g.C, g.B @ Di, -Di @ g.C, Di, g.output_labels, g.input_labels
    )


def default_grid(lo: float = 1e-2, hi: float = 1e7, ppd: int = 200) -> np.ndarray:
    """Log-spaced frequency grid in rad/s, ``ppd`` points per decade."""
    if not (0 < lo < hi) or ppd < 1:
        raise ValueError("need 0 < lo < hi and ppd >= 1")
    n = int(round(np.log10(hi / lo) * ppd)) + 1
    return np.logspace(np.log10(lo), np.log10(hi), n)


@dataclass(eq=False)
class FreqResponse:
    """Complex response ``values[k, i, j]`` from input ``j`` to output ``i`` at ``omega[k]``.

    ``valid[k]`` is False where ``j*omega[k]`` hits a pole; those values are NaN.
    """

    omega: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if np.any(self.omega <= 0) or np.any(np.diff(self.omega) <= 0):
            raise ValueError("omega must be positive and strictly increasing")

    def channel(self, out=0, inp=0) -> np.ndarray:
        i = self.output_labels.index(out) if isinstance(out, str) else out
        j = self.input_labels.index(inp) if isinstance(inp, str) else inp
        return self.values[:, i, j]

    def magnitude(self, out=0, inp=0) -> np.ndarray:
        return np.abs(self.channel(out, inp))

    def phase_deg(self, out=0, inp=0) -> np.ndarray:
        """Unwrapped phase in degrees."""
        return np.degrees(np.unwrap(np.angle(self.channel(out, inp))))

    def to_csv(self, path) -> None:
        names = [
            (o, i) for o in self.output_labels for i in self.input_labels
        ]
        header = ["omega_rad_s"]
        for o, i in names:
            header += [f"re_{o}_from_{i}", f"im_{o}_from_{i}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, om in enumerate(self.omega):
                row = [repr(float(om))]
                for a, _ in enumerate(self.output_labels):
                    for b, _ in enumerate(self.input_labels):
                        v = self.values[k, a, b]
                        row += [repr(float(v.real)), repr(float(v.imag))]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "FreqResponse":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        pairs = [h[3:].split("_from_") for h in header[1::2]]
        outs = list(dict.fromkeys(p[0] for p in pairs))
        ins = list(dict.fromkeys(p[1] for p in pairs))
        data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), -1)
        omega = data[:, 0]
        z = data[:, 1::2] + 1j * data[:, 2::2]
        values = z.reshape(len(body), len(outs), len(ins))
        return cls(omega, values, np.isfinite(values).all(axis=(1, 2)), tuple(ins), tuple(outs))


def _resolvent_values(g: StateSpace, omega: np.ndarray, chunk: int = 512) -> np.ndarray:
    n = g.n_states
    out = np.empty((omega.size, g.n_outputs, g.n_inputs), dtype=complex)
    if n == 0:
        out[:] = g.D
        return out
    eye = np.eye(n)
    for s0 in range(0, omega.size, chunk):
        w = omega[s0 : s0 + chunk]
        M = 1j * w[:, None, None] * eye[None] - g.A[None]
        X = np.linalg.solve(M, np.broadcast_to(g.B, (w.size,) + g.B.shape))
        out[s0 : s0 + chunk] = g.C[None] @ X + g.D[None]
    return out


def freq_response(g: StateSpace, omega=None, pole_tol: float = 1e-10) -> FreqResponse:
    """Evaluate ``C (j w I - A)^{-1} B + D`` on a frequency grid."""
    omega = default_grid() if omega is None else np.asarray(omega, dtype=float)
    valid = np.ones(omega.size, dtype=bool)
    lam = g.poles()
    imag_poles = lam[np.abs(lam.real) <= pole_tol * np.maximum(1.0, np.abs(lam))]
    for p in imag_poles:
        valid &= np.abs(omega - abs(p.imag)) > pole_tol * max(1.0, abs(p))
    values = np.full((omega.size, g.n_outputs, g.n_inputs), np.nan + 0j)
    if valid.any():
        values[valid] = _resolvent_values(g, omega[valid])
    return FreqResponse(omega, values, valid, g.input_labels, g.output_labels)


def is_stable(g: StateSpace, margin: float = 0.0) -> bool:
    """True iff every pole has real part below ``-margin``."""
    if g.n_states == 0:
        return True
    return bool(np.max(np.linalg.eigvals(g.A).real) < -margin)


def _siso(g: StateSpace, name: str) -> None:
    if not g.is_siso:
        raise ValueError(f"{name} needs a SISO system, got {g.n_outputs}x{g.n_inputs}")


def _log_bisect(f, lo: float, hi: float, rel_tol: float) -> float:
    """Root of ``f`` in ``[lo, hi]`` with ``f(lo) >= 0 > f(hi)``, bisected in log-frequency."""
    flo = f(lo)
    if flo <= 0:
        # The grid bracket put the crossing on ``lo`` itself, up to roundoff.
        return lo
    while hi / lo - 1.0 > rel_tol:
        mid = math.sqrt(lo * hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return math.sqrt(lo * hi)


def bandwidth_3db(g: StateSpace, omega=None, rel_tol: float = 1e-6, require_stable: bool = True) -> float:
    """Lowest frequency where ``|g(jw)|`` first falls below ``|g(0)|/sqrt(2)``.

    Returns :data:`BEYOND_GRID` when the response never drops that far on
    the grid.
    """
    _siso(g, "bandwidth_3db")
    if require_stable and not is_stable(g):
        raise UnstableSystemError("bandwidth_3db needs a stable system")
    dc = abs(g.evaluate(0.0)[0, 0])
    if not dc > 0.0:
        raise ValueError("bandwidth_3db needs a nonzero DC gain")
    omega = default_grid() if omega is None else np.asarray(omega, dtype=float)
    level = dc / math.sqrt(2.0)
    f = lambda w: abs(g.evaluate(1j * w)[0, 0]) - level  # noqa: E731
    mags = np.abs(_resolvent_values(g, omega)[:, 0, 0])
    below = np.flatnonzero(mags < level)
    if below.size == 0:
        return BEYOND_GRID
    k = below[0]
    if k == 0:
        lo = omega[0]
        while f(lo) < 0 and lo > 1e-12:
            lo /= 10.0
        if f(lo) < 0:
            return 0.0
        return _log_bisect(f, lo, omega[0], rel_tol)
    return _log_bisect(f, omega[k - 1], omega[k], rel_tol)


def crossover_frequency(loop: StateSpace, omega=None, rel_tol: float = 1e-6) -> float:
    """Lowest frequency where ``|loop(jw)|`` falls through 1; :data:`BEYOND_GRID` if never."""
    _siso(loop, "crossover_frequency")
    omega = default_grid() if omega is None else np.asarray(omega, dtype=float)
    fr = freq_response(loop, omega)
    mags = np.where(fr.valid, np.abs(fr.values[:, 0, 0]), np.inf)
    idx = np.flatnonzero((mags[:-1] >= 1.0) & (mags[1:] < 1.0))
    if idx.size == 0:
        return BEYOND_GRID
    k = idx[0]
    f = lambda w: abs(loop.evaluate(1j * w)[0, 0]) - 1.0  # noqa: E731
    return _log_bisect(f, omega[k], omega[k + 1], rel_tol)


def _sigma_max(g: StateSpace, omega: np.ndarray) -> np.ndarray:
    vals = _resolvent_values(g, omega)
    if vals.shape[1] == 1 or vals.shape[2] == 1:
        return np.sqrt(np.sum(np.abs(vals) ** 2, axis=(1, 2)))
    return np.linalg.svd(vals, compute_uv=False)[:, 0]


def _golden_max(f, lo: float, hi: float, rel_tol: float) -> tuple[float, float]:
    """Maximize ``f`` over log-frequency in ``[lo, hi]`` by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while b - a > rel_tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(math.exp(d))
    if fc > fd:
        return math.exp(c), fc
    return math.exp(d), fd


def hinf_norm(
    g: StateSpace,
    rel_tol: float = 1e-6,
    band: tuple[float, float] = (1e-4, 1e9),
    ppd: int = 400,
    return_peak: bool = False,
):
    """H-infinity norm of a stable system.

    Dense log-grid scan (``ppd`` points per decade over ``band``, pole
    frequencies added) followed by golden-section refinement of the
    largest local maxima. The value is a lower bound on the true norm.
    """
    if not is_stable(g):
        raise UnstableSystemError("hinf_norm needs a stable system")
    if g.n_inputs == 0 or g.n_outputs == 0:
        return (0.0, 0.0) if return_peak else 0.0
    grid = default_grid(band[0], band[1], ppd)
    lam = g.poles()
    extra = np.abs(lam[np.abs(lam) > 0])
    extra = np.concatenate([extra, np.abs(lam.imag[lam.imag > 0])])
    extra = extra[(extra > band[0]) & (extra < band[1])]
    grid = np.unique(np.concatenate([grid, extra]))
    sig = _sigma_max(g, grid)
    best_w, best = 0.0, float(np.linalg.norm(g.dc_gain(), 2)) if g.n_states else 0.0
    hf = float(np.linalg.norm(g.D, 2))
    if hf > best:
        best_w, best = math.inf, hf
    f = lambda w: float(_sigma_max(g, np.array([w]))[0])  # noqa: E731
    interior = np.flatnonzero(
        (sig[1:-1] >= sig[:-2]) & (sig[1:-1] >= sig[2:])
    ) + 1
    candidates = sorted(interior, key=lambda k: -sig[k])[:8]
    if sig.argmax() not in candidates:
        candidates.append(int(sig.argmax()))
    for k in candidates:
        lo = grid[max(k - 1, 0)]
        hi = grid[min(k + 1, grid.size - 1)]
        w, v = _golden_max(f, lo, hi, rel_tol * 1e-2)
        v = max(v, sig[k])
        if v > best:
            best_w, best = (w if v > sig[k] else grid[k]), v
    return (best, best_w) if return_peak else best
