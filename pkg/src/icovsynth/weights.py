"""Weighting-function constructors and the weight-case file format.

A weight case names one transfer function per channel (``W_s``, ``W_u``,
``W_d``). Each is stored as a list of factors and realized factor by factor
so that products of sharp resonant sections never go through a single
high-degree polynomial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .lti import RationalTF, StateSpace, as_ss, static_gain

__all__ = [
    "SensWeightParams",
    "CtrlWeightParams",
    "ResonantSectionParams",
    "w_s1_first_order",
    "w_u",
    "w_u_from_corners",
    "resonant_section",
    "w_d_static",
    "w_d_lowpass",
    "first_order_lag",
    "cascade",
    "Weight",
    "WeightCase",
    "factor_from_dict",
    "load_weight_cases",
    "save_weight_cases",
    "table2_cases",
    "table2_document",
    "cases_from_document",
    "variants_document",
    "OMEGA_R",
    "MAX_CASCADE_ORDER",
]

MAX_CASCADE_ORDER = 24


@dataclass(frozen=True)
class SensWeightParams:
    """Error weight ``(s/M_s + omega_b)/(s + eps*omega_b)``."""

    M_s: float
    omega_b: float
    eps: float

    def __post_init__(self):
        if not self.M_s >= 1.0:
            raise ValueError("M_s must be >= 1")
        if not self.omega_b > 0.0:
            raise ValueError("omega_b must be positive")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")


@dataclass(frozen=True)
class CtrlWeightParams:
    """Control weight ``(s + omega_bc/M_u)/(eps1*s + omega_bc)``."""

    M_u: float
    omega_bc: float
    eps1: float

    def __post_init__(self):
        if not self.M_u >= 1.0:
            raise ValueError("M_u must be >= 1")
        if not self.omega_bc > 0.0:
            raise ValueError("omega_bc must be positive")
        if not 0.0 < self.eps1 <= 1.0:
            raise ValueError("eps1 must lie in (0, 1]")


@dataclass(frozen=True)
class ResonantSectionParams:
    omega_0: float
    zeta_num: float
    zeta_den: float

    def __post_init__(self):
        if not self.omega_0 > 0.0:
            raise ValueError("omega_0 must be positive")
        if not (self.zeta_num > 0.0 and self.zeta_den > 0.0):
            raise ValueError("damping ratios must be positive")


def w_s1_first_order(p: SensWeightParams) -> RationalTF:
    """DC gain ``1/eps``, high-frequency gain ``1/M_s``, crossing near ``omega_b``."""
    return RationalTF([1.0 / p.M_s, p.omega_b], [1.0, p.eps * p.omega_b])


def w_u(p: CtrlWeightParams) -> RationalTF:
    """DC gain ``1/M_u``, high-frequency gain ``1/eps1``."""
    return RationalTF([1.0, p.omega_bc / p.M_u], [p.eps1, p.omega_bc])


def w_u_from_corners(dc_gain: float, omega_zero: float, omega_pole: float) -> CtrlWeightParams:
    """Parameters for ``dc_gain * (s/omega_zero + 1)/(s/omega_pole + 1)``."""
    M_u = 1.0 / dc_gain
    omega_bc = omega_zero * M_u
    return CtrlWeightParams(M_u=M_u, omega_bc=omega_bc, eps1=omega_bc / omega_pole)


def resonant_section(p: ResonantSectionParams) -> RationalTF:
    """``(s^2 + 2 zn w0 s + w0^2)/(s^2 + 2 zd w0 s + w0^2)``; gain ``zn/zd`` at ``w0``."""
    w0 = p.omega_0
    return RationalTF([1.0, 2.0 * p.zeta_num * w0, w0 * w0], [1.0, 2.0 * p.zeta_den * w0, w0 * w0])


def w_d_static(v_max: float) -> RationalTF:
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    return RationalTF.constant(1.0 / v_max)


def w_d_lowpass(omega_p: float) -> RationalTF:
    """Unity-DC first-order lag ``1/(s/omega_p + 1)``."""
    return first_order_lag(1.0, omega_p)


def first_order_lag(gain: float, omega_p: float) -> RationalTF:
    if not omega_p > 0:
        raise ValueError("omega_p must be positive")
    return RationalTF([gain * omega_p], [1.0, omega_p])


def cascade(w: RationalTF, k: int, max_order: int = MAX_CASCADE_ORDER) -> RationalTF:
    """``w**k`` by repeated polynomial convolution."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if w.order * k > max_order:
        raise ValueError(f"cascade order {w.order * k} exceeds the limit {max_order}")
    out = w
    for _ in range(k - 1):
        out = out * w
    return out


# --- weight-case files -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Weight:
    """A product of SISO factors, realized one factor at a time."""

    factors: tuple[RationalTF, ...] = ()

    @property
    def order(self) -> int:
        return sum(f.order for f in self.factors)

    @property
    def is_unity(self) -> bool:
        return all(f.order == 0 and f.num[0] == f.den[0] for f in self.factors)

    def __call__(self, s):
        out = np.ones_like(np.asarray(s, dtype=complex))
        for f in self.factors:
            out = out * f(s)
        return out

    def tf(self) -> RationalTF:
        out = RationalTF.constant(1.0)
        for f in self.factors:
            out = out * f
        return out

    def to_ss(self, label_in: str = "in", label_out: str = "out") -> StateSpace:
        if not self.factors:
            return static_gain([[1.0]], [label_in], [label_out])
        sys = as_ss(list(self.factors))
        return sys.balanced().relabel([label_in], [label_out])


def _resolve(value, context: Mapping[str, float]) -> float:
    if isinstance(value, str):
        try:
            return float(context[value])
        except KeyError:
            raise KeyError(f"unknown symbolic frequency {value!r}; known: {sorted(context)}") from None
    return float(value)


def factor_from_dict(entry: Mapping[str, Any], context: Mapping[str, float] | None = None) -> RationalTF:
    """Build one factor from its JSON description.

    Numeric fields may name a context entry (e.g. ``"omega_r"``) instead of
    giving a number.
    """
    ctx = dict(context or {})
    kind = entry["type"]
    g = lambda key, default=None: _resolve(entry.get(key, default), ctx)  # noqa: E731
    if kind == "unity":
        f = RationalTF.constant(1.0)
    elif kind == "gain":
        f = RationalTF.constant(g("k"))
    elif kind == "lag":
        f = first_order_lag(g("gain", 1.0), g("omega_p"))
    elif kind == "w_s1":
        f = w_s1_first_order(SensWeightParams(g("M_s"), g("omega_b"), g("eps")))
    elif kind == "w_u":
        f = w_u(CtrlWeightParams(g("M_u"), g("omega_bc"), g("eps1")))
    elif kind == "w_u_corners":
        f = w_u(w_u_from_corners(g("dc_gain"), g("omega_zero"), g("omega_pole")))
    elif kind == "resonant":
        f = resonant_section(ResonantSectionParams(g("omega_0"), g("zeta_num"), g("zeta_den")))
    elif kind == "w_d_static":
        f = w_d_static(g("v_max"))
    elif kind == "w_d_lowpass":
        f = w_d_lowpass(g("omega_p"))
    else:
        raise ValueError(f"unknown weight factor type {kind!r}")
    power = int(entry.get("power", 1))
    return cascade(f, power) if power > 1 else f


@dataclass(eq=False)
class WeightCase:
    """One row of a weight sweep: weights keyed by plant channel label."""

    case_id: str
    output_weights: dict[str, Weight] = field(default_factory=dict)
    input_weights: dict[str, Weight] = field(default_factory=dict)
    description: str = ""
    source: dict = field(default_factory=dict, repr=False)


def _weight(factors, context) -> Weight:
    return Weight(tuple(factor_from_dict(f, context) for f in factors))


def case_from_dict(entry: Mapping[str, Any], context: Mapping[str, float]) -> WeightCase:
    return WeightCase(
        case_id=str(entry["id"]),
        output_weights={k: _weight(v, context) for k, v in entry.get("outputs", {}).items()},
        input_weights={k: _weight(v, context) for k, v in entry.get("inputs", {}).items()},
        description=entry.get("description", ""),
        source=dict(entry),
    )


def load_weight_cases(path, context: Mapping[str, float] | None = None) -> list[WeightCase]:
    """Read a weight-case JSON document.

    Layout::

        {"frequencies": {"omega_r": 376.99},
         "cases": [{"id": "I",
                    "outputs": {"z_err": [factor, ...], "z_vinv": [...]},
                    "inputs": {"i_d": [...]}}]}

    ``context`` supplies plant-derived frequencies (``omega_LC``,
    ``omega_res``); entries in the file's ``frequencies`` block are added
    without overriding them.
    """
    doc = json.loads(Path(path).read_text())
    return cases_from_document(doc, context)


def cases_from_document(doc: Mapping[str, Any], context: Mapping[str, float] | None = None) -> list[WeightCase]:
    ctx = dict(doc.get("frequencies", {}))
    ctx.update(context or {})
    return [case_from_dict(c, ctx) for c in doc.get("cases", [])]


def save_weight_cases(doc: Mapping[str, Any], path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


OMEGA_R = 2.0 * math.pi * 60.0


def _table2_ws(gain: float = 50.0, resonance: str = "omega_LC") -> list[dict]:
    return [
        {"type": "lag", "gain": gain, "omega_p": 1e3},
        {"type": "resonant", "omega_0": "omega_r", "zeta_num": 1.0, "zeta_den": 0.001},
        {"type": "resonant", "omega_0": resonance, "zeta_num": 1.0, "zeta_den": 10.0},
    ]


_TABLE2_WU = [{"type": "w_u_corners", "dc_gain": 0.01, "omega_zero": 100.0, "omega_pole": 1e6}]
_TABLE2_WD = [{"type": "w_d_lowpass", "omega_p": 3147.0}]


def table2_document() -> dict:
    """The four grid-forming weight cases as a JSON-ready document."""
    unity = [{"type": "unity"}]
    rows = [
        ("I", unity, unity),
        ("II", _TABLE2_WU, unity),
        ("III", unity, _TABLE2_WD),
        ("IV", _TABLE2_WU, _TABLE2_WD),
    ]
    return {
        "frequencies": {"omega_r": OMEGA_R},
        "cases": [
            {
                "id": cid,
                "outputs": {"z_err": _table2_ws(), "z_vinv": wu},
                "inputs": {"i_d": wd},
            }
            for cid, wu, wd in rows
        ],
    }


def variants_document() -> dict:
    """Case IV with the alternative error-weight readings kept as separate cases.

    ``IV-gain100`` uses the leading factor 100 of the LCL current design in
    place of 50; ``IV-res`` centres the notch at the ladder resonance
    ``omega_res`` instead of ``omega_LC``.
    """
    rows = [("IV-gain100", _table2_ws(100.0)), ("IV-res", _table2_ws(50.0, "omega_res"))]
    return {
        "frequencies": {"omega_r": OMEGA_R},
        "cases": [
            {"id": cid, "outputs": {"z_err": ws, "z_vinv": _TABLE2_WU}, "inputs": {"i_d": _TABLE2_WD}}
            for cid, ws in rows
        ],
    }


def table2_cases(context: Mapping[str, float]) -> list[WeightCase]:
    """Table-II weight cases; ``context`` must provide ``omega_LC``."""
    return cases_from_document(table2_document(), context)
