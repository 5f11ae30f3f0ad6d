"""H-infinity output-feedback synthesis for inverter current and voltage control.

Submodules: ``matkernel`` (Riccati solves), ``lti`` (state-space algebra and
frequency analysis), ``weights``, ``plants``, ``synth``, ``multiloop``
(cascade reading of a synthesized controller), ``sim`` (scenario
simulation), ``experiments`` and ``cli``.
"""

from .lti import GeneralizedPlant, RationalTF, StateSpace, freq_response, hinf_norm, lft
from .matkernel import care
from .multiloop import bandwidth_ratio, decompose_icov
from .plants import GridFormingParams, LCLParams, LFilterParams, grid_forming_plant
from .sim import Scenario, simulate, table1_scenario
from .synth import SynthesisResult, hinf_synthesize
from .weights import table2_cases

__version__ = "0.1.0"

__all__ = [
    "GeneralizedPlant",
    "RationalTF",
    "StateSpace",
    "freq_response",
    "hinf_norm",
    "lft",
    "care",
    "bandwidth_ratio",
    "decompose_icov",
    "GridFormingParams",
    "LCLParams",
    "LFilterParams",
    "grid_forming_plant",
    "Scenario",
    "simulate",
    "table1_scenario",
    "SynthesisResult",
    "hinf_synthesize",
    "table2_cases",
]
