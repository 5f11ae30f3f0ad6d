"""Averaged single-phase converter plants.

Signals are volts and amperes, parameters SI. The grid-forming plant is
returned as a generalized plant with inputs ``[v_star, i_d | u]`` and
outputs ``[z_err, z_vinv | y_err, y_i, y_iinv]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .lti import GeneralizedPlant, RationalTF, StateSpace

__all__ = [
    "LFilterParams",
    "LCLParams",
    "GridFormingParams",
    "l_filter_plant",
    "l_filter_tf",
    "l_filter_generalized_plant",
    "l_filter_analysis_plant",
    "lcl_resonance",
    "lc_resonance",
    "lcl_current_plant",
    "grid_forming_plant",
    "grid_forming_analysis_plant",
    "load_params",
    "save_params",
    "GRID_FORMING_STATES",
]

GRID_FORMING_STATES = ("i_inv", "i", "v")


def _check_positive(obj, names, allow_zero=()):
    for name in names:
        v = getattr(obj, name)
        if name in allow_zero:
            if not v >= 0:
                raise ValueError(f"{name} must be >= 0")
        elif not v > 0:
            raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class LFilterParams:
    L: float = 1e-3
    R: float = 0.1
    v_ac_max: float = 120.0

    def __post_init__(self):
        _check_positive(self, ("L", "R", "v_ac_max"), allow_zero=("R",))


@dataclass(frozen=True)
class LCLParams:
    L1: float = 1e-3
    L2: float = 1e-3
    C: float = 10e-6
    R1: float = 0.1
    R2: float = 0.1
    v_ac_max: float = 120.0

    def __post_init__(self):
        _check_positive(self, ("L1", "L2", "C", "R1", "R2", "v_ac_max"), allow_zero=("R1", "R2"))


@dataclass(frozen=True)
class GridFormingParams:
    """Inverter-side inductor, filter capacitor, grid-side inductor and load."""

    L_i: float = 1e-3
    R_i: float = 0.1
    L_g: float = 1e-3
    R_g: float = 0.1
    C: float = 24e-6
    Z_L: float = 36.0

    def __post_init__(self):
        _check_positive(self, ("L_i", "R_i", "L_g", "R_g", "C", "Z_L"), allow_zero=("R_i", "R_g"))

    @property
    def omega_LC(self) -> float:
        """Inverter-side LC resonance ``1/sqrt(L_i C)``."""
        return lc_resonance(self.L_i, self.C)

    @property
    def omega_res(self) -> float:
        """``L_i``-``C``-``L_g`` ladder resonance."""
        return lcl_resonance(LCLParams(L1=self.L_i, L2=self.L_g, C=self.C))

    def frequencies(self) -> dict[str, float]:
        return {"omega_LC": self.omega_LC, "omega_res": self.omega_res}


def l_filter_plant(p: LFilterParams) -> StateSpace:
    """``L di/dt = u - v_ac - R i``; inputs ``[u, v_ac]``, output ``i``."""
    return StateSpace(
        [[-p.R / p.L]],
        [[1.0 / p.L, -1.0 / p.L]],
        [[1.0]],
        [[0.0, 0.0]],
        ["u", "v_ac"],
        ["i"],
    )


def l_filter_tf(p: LFilterParams) -> RationalTF:
    """``1/(sL + R)``."""
    return RationalTF([1.0], [p.L, p.R])


def l_filter_generalized_plant(p: LFilterParams) -> GeneralizedPlant:
    """Current tracking plant: ``w = [i_ref, v_ac]``, ``z = [i_ref - i, u]``, ``y = i_ref - i``."""
    A = [[-p.R / p.L]]
    B = [[0.0, -1.0 / p.L, 1.0 / p.L]]
    C = [[-1.0], [0.0], [-1.0]]
    D = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
    sys = StateSpace(A, B, C, D, ["i_ref", "v_ac", "u"], ["z_err", "z_u", "y_err"])
    return GeneralizedPlant(sys, n_w=2, n_u=1, n_z=2, n_y=1)


def l_filter_analysis_plant(p: LFilterParams) -> StateSpace:
    """Outputs ``[i, u, error, i_ref, v_ac, y_err]``; the last is closed through K."""
    A = [[-p.R / p.L]]
    B = [[0.0, -1.0 / p.L, 1.0 / p.L]]
    C = [[1.0], [0.0], [-1.0], [0.0], [0.0], [-1.0]]
    D = np.zeros((6, 3))
    D[1, 2] = D[2, 0] = D[3, 0] = D[4, 1] = D[5, 0] = 1.0
    return StateSpace(A, B, C, D, ["i_ref", "v_ac", "u"], ["i", "u", "error", "i_ref", "v_ac", "y_err"])


def lcl_resonance(p: LCLParams) -> float:
    return 1.0 / math.sqrt(p.L1 * p.L2 * p.C / (p.L1 + p.L2))


def lc_resonance(L: float, C: float) -> float:
    return 1.0 / math.sqrt(L * C)


def lcl_current_plant(p: LCLParams) -> StateSpace:
    """States ``[i1, i2, v_c]``; inputs ``[u, v_ac]``; output grid-side current ``i2``."""
    A = [
        [-p.R1 / p.L1, 0.0, -1.0 / p.L1],
        [0.0, -p.R2 / p.L2, 1.0 / p.L2],
        [1.0 / p.C, -1.0 / p.C, 0.0],
    ]
    B = [[1.0 / p.L1, 0.0], [0.0, -1.0 / p.L2], [0.0, 0.0]]
    return StateSpace(A, B, [[0.0, 1.0, 0.0]], [[0.0, 0.0]], ["u", "v_ac"], ["i2"])


def _grid_forming_ab(p: GridFormingParams):
    A = np.array(
        [
            [-p.R_i / p.L_i, 0.0, 0.0],
            [0.0, -(p.R_g + p.Z_L) / p.L_g, 1.0 / p.L_g],
            [1.0 / p.C, -1.0 / p.C, 0.0],
        ]
    )
    # inputs: v_star, i_d, u
    B = np.array([[0.0, 0.0, 1.0 / p.L_i], [0.0, -p.Z_L / p.L_g, 0.0], [0.0, 0.0, 0.0]])
    return A, B


def grid_forming_plant(p: GridFormingParams) -> GeneralizedPlant:
    """Generalized plant of the grid-forming inverter with a constant-impedance load.

    Control input ``u = v_inv - v``. Regulated outputs are the voltage error
    and the inverter voltage ``v_inv = u + v``; measurements are the voltage
    error and both inductor currents.
    """
    A, B = _grid_forming_ab(p)
    C = np.array(
        [
            [0.0, 0.0, -1.0],  # z_err = v_star - v
            [0.0, 0.0, 1.0],  # z_vinv = u + v
            [0.0, 0.0, -1.0],  # y_err = v_star - v
            [0.0, 1.0, 0.0],  # y_i = i
            [1.0, 0.0, 0.0],  # y_iinv = i_inv
        ]
    )
    D = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    sys = StateSpace(A, B, C, D, ["v_star", "i_d", "u"], ["z_err", "z_vinv", "y_err", "y_i", "y_iinv"])
    return GeneralizedPlant(sys, n_w=2, n_u=1, n_z=2, n_y=3)


def grid_forming_analysis_plant(p: GridFormingParams) -> StateSpace:
    """Grid-forming plant exposing physical signals ahead of the measurements.

    Inputs ``[v_star, i_d, u]``; outputs ``[v, i, i_inv, v_inv, u, error,
    v_star, i_d, y_err, y_i, y_iinv]``. Closing the last three outputs
    through a controller gives the simulated closed loop.
    """
    A, B = _grid_forming_ab(p)
    C = np.array(
        [
            [0, 0, 1],
            [0, 1, 0],
            [1, 0, 0],
            [0, 0, 1],
            [0, 0, 0],
            [0, 0, -1],
            [0, 0, 0],
            [0, 0, 0],
            [0, 0, -1],
            [0, 1, 0],
            [1, 0, 0],
        ],
        dtype=float,
    )
    D = np.zeros((11, 3))
    D[3, 2] = 1.0
    D[4, 2] = 1.0
    D[5, 0] = 1.0
    D[6, 0] = 1.0
    D[7, 1] = 1.0
    D[8, 0] = 1.0
    outs = ["v", "i", "i_inv", "v_inv", "u", "error", "v_star", "i_d", "y_err", "y_i", "y_iinv"]
    return StateSpace(A, B, C, D, ["v_star", "i_d", "u"], outs)


# --- parameter files ---------------------------------------------------------

_UNITS = {
    "L": "henry", "L1": "henry", "L2": "henry", "L_i": "henry", "L_g": "henry",
    "R": "ohm", "R1": "ohm", "R2": "ohm", "R_i": "ohm", "R_g": "ohm", "Z_L": "ohm",
    "C": "farad", "v_ac_max": "volt",
}  # fmt: skip

_KINDS = {"l_filter": LFilterParams, "lcl": LCLParams, "grid_forming": GridFormingParams}


def params_to_dict(p) -> dict:
    kind = next(k for k, cls in _KINDS.items() if isinstance(p, cls))
    return {"kind": kind, **{f"{k}_{_UNITS[k]}": v for k, v in asdict(p).items()}}


def params_from_dict(doc: dict):
    """Inverse of :func:`params_to_dict`; unit suffixes are required."""
    cls = _KINDS[doc["kind"]]
    kwargs = {}
    for f in fields(cls):
        key = f"{f.name}_{_UNITS[f.name]}"
        if key in doc:
            kwargs[f.name] = float(doc[key])
    unknown = set(doc) - {"kind"} - {f"{f.name}_{_UNITS[f.name]}" for f in fields(cls)}
    if unknown:
        raise ValueError(f"unknown plant parameter fields: {sorted(unknown)}")
    return cls(**kwargs)


def load_params(path):
    """Read a plant parameter file.

    A file holds either one parameter record or a mapping of records keyed
    by plant kind (``{"grid_forming": {...}, "l_filter": {...}}``).
    """
    doc = json.loads(Path(path).read_text())
    if "kind" in doc:
        return params_from_dict(doc)
    return {k: params_from_dict({"kind": k, **v}) for k, v in doc.items()}


def save_params(p, path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(p), indent=2) + "\n")
