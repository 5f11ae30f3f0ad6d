"""Reading a three-input controller as an inner-current/outer-voltage cascade.

A controller ``u = K1 (v* - v) + K2 i + K3 i_inv`` matches the nested form
``u = K_i (K_v (v* - v) + i - i_inv)`` when ``K3 = -K2``; the cascade gains
are then ``K_i = K2`` and ``K_v = K1 / K2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lti import (
    StateSpace,
    UnstableSystemError,
    bandwidth_3db,
    crossover_frequency,
    default_grid,
    feedback,
    is_stable,
    series,
    ss_inverse,
    static_gain,
    tf_to_ss,
    RationalTF,
)
from .plants import GridFormingParams
from .synth import DEFAULT_DELTA

__all__ = [
    "IcovDecomposition",
    "BandwidthReport",
    "decompose_icov",
    "inner_loop_gain",
    "outer_loop_gain",
    "bandwidth_ratio",
    "ICOV_INPUTS",
]

ICOV_INPUTS = ("y_err", "y_i", "y_iinv")


@dataclass(eq=False)
class IcovDecomposition:
    """Channels of a ``1 x 3`` controller and the equivalent cascade gains.

    ``K_v_equiv`` is ``None`` when ``K2`` could not be inverted; ``note``
    then says why.
    """

    K1: StateSpace
    K2: StateSpace
    K3: StateSpace
    K_i_equiv: StateSpace
    K_v_equiv: Optional[StateSpace]
    note: str = ""


@dataclass
class BandwidthReport:
    """Closed-loop bandwidths of the two loops and the plant-level verdict.

    Bandwidths are NaN when undefined for that loop (see ``notes``).
    """

    omega_i: float
    omega_v: float
    ratio: float
    stable: bool
    crossover_i: float = math.nan
    crossover_v: float = math.nan
    notes: dict = field(default_factory=dict)


def _channel(K: StateSpace, j: int, name: str) -> StateSpace:
    return K.subsystem(inputs=[j]).relabel([name], list(K.output_labels))


def _forced_feedthrough(g: StateSpace, delta: float) -> list[StateSpace]:
    """Candidates for ``g`` with ``|D| >= delta``, best first."""
    d = float(g.D[0, 0])
    if abs(d) >= delta:
        return [g]
    signs = [math.copysign(1.0, d)] if d != 0.0 else [1.0, -1.0]
    return [StateSpace(g.A, g.B, g.C, [[s * delta]], g.input_labels, g.output_labels) for s in signs]


def decompose_icov(K: StateSpace, delta: float = DEFAULT_DELTA) -> IcovDecomposition:
    """Split ``K`` (inputs ``[v*-v, i, i_inv]``, one output) into its channels.

    ``K_v_equiv = K1 K2^{-1}`` uses the state-space inverse of ``K2`` with its
    feedthrough raised to at least ``delta`` in magnitude. When ``K2`` has no
    feedthrough both signs are tried and the one with a stable inverse is
    preferred.

    Raises
    ------
    ValueError
        ``K`` is not ``1 x 3``.
    """
    if K.n_inputs != 3 or K.n_outputs != 1:
        raise ValueError(f"expected a 1 x 3 controller, got {K.n_outputs} x {K.n_inputs}")
    K1, K2, K3 = (_channel(K, j, lab) for j, lab in enumerate(ICOV_INPUTS))
    K_v = None
    note = ""
    if delta <= 0.0 and K2.D[0, 0] == 0.0:
        note = "K2 has no feedthrough; K_v omitted"
    else:
        candidates = _forced_feedthrough(K2, max(delta, 0.0))
        inverses = [ss_inverse(c) for c in candidates]
        pick = next((k for k, inv in enumerate(inverses) if is_stable(inv)), 0)
        K_v = series(inverses[pick], K1).relabel(["e_v"], ["i_ref"])
        if candidates[pick] is not K2:
            note = f"K2 feedthrough set to {candidates[pick].D[0, 0]:+.3g} for inversion"
    return IcovDecomposition(K1=K1, K2=K2, K3=K3, K_i_equiv=K2, K_v_equiv=K_v, note=note)


def inner_loop_gain(d: IcovDecomposition, p: GridFormingParams) -> StateSpace:
    """``l_i = K2 / (s L_i + R_i)``."""
    G = tf_to_ss(RationalTF([1.0], [p.L_i, p.R_i]), "u", "i_inv")
    return series(d.K2, G)


def outer_loop_gain(d: IcovDecomposition, p: GridFormingParams) -> StateSpace:
    """``l_v = K_v / (s C)``."""
    if d.K_v_equiv is None:
        raise ValueError(d.note or "K_v unavailable")
    G = tf_to_ss(RationalTF([1.0], [p.C, 0.0]), "i_ref", "v")
    return series(d.K_v_equiv, G)


def _loop_bandwidth(loop: StateSpace, omega, notes: dict, key: str) -> tuple[float, float]:
    T = feedback(loop, static_gain([[1.0]]), sign=-1)
    try:
        bw = bandwidth_3db(T, omega, require_stable=False)
    except (ValueError, UnstableSystemError) as exc:
        notes[key] = str(exc)
        bw = math.nan
    if not is_stable(T):
        notes[f"{key}_closed_loop"] = "unstable"
    try:
        wc = crossover_frequency(loop, omega)
    except ValueError:
        wc = math.nan
    return bw, wc


def bandwidth_ratio(
    d: IcovDecomposition,
    p: GridFormingParams,
    closed_loop: StateSpace,
    omega=None,
    margin: float = 0.0,
) -> BandwidthReport:
    """Closed-loop bandwidths of ``l_i/(1+l_i)`` and ``l_v/(1+l_v)``.

    ``stable`` is the eigenvalue verdict on ``closed_loop`` (poles left of
    ``-margin``). Each loop's crossover frequency is reported as well.
    """
    omega = default_grid() if omega is None else np.asarray(omega, dtype=float)
    notes: dict = {}
    w_i, c_i = _loop_bandwidth(inner_loop_gain(d, p), omega, notes, "inner")
    if d.K_v_equiv is None:
        w_v, c_v = math.nan, math.nan
        notes["outer"] = d.note
    else:
        w_v, c_v = _loop_bandwidth(outer_loop_gain(d, p), omega, notes, "outer")
    ratio = w_i / w_v if w_v > 0 and math.isfinite(w_v) else math.nan
    return BandwidthReport(
        omega_i=w_i,
        omega_v=w_v,
        ratio=ratio,
        stable=is_stable(closed_loop, margin),
        crossover_i=c_i,
        crossover_v=c_v,
        notes=notes,
    )
