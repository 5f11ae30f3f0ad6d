"""The three studies: L-filter controller comparison, weight sweep, W_d pole sweep.

Each study is a plain function returning rows or a small report; the CLI
only parses files and writes what these return.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .lti import StateSpace, as_ss, lft
from .multiloop import (
    BandwidthReport,
    IcovDecomposition,
    bandwidth_ratio,
    decompose_icov,
)
from .plants import (
    GridFormingParams,
    LFilterParams,
    grid_forming_analysis_plant,
    grid_forming_plant,
    l_filter_analysis_plant,
    l_filter_generalized_plant,
    l_filter_tf,
)
from .sim import (
    Scenario,
    ScenarioTrace,
    Segment,
    SignalSpec,
    classify_stability,
    overshoot,
    simulate,
    steady_state_error,
    table1_scenario,
)
from .synth import (
    DEFAULT_DELTA,
    SynthesisError,
    SynthesisResult,
    augment_with_case,
    augment_with_weights,
    hinf_synthesize,
    pi_inverse_design,
    sensitivity_set,
)
from .weights import (
    SensWeightParams,
    WeightCase,
    cascade,
    cases_from_document,
    table2_document,
    w_d_static,
    w_s1_first_order,
)

__all__ = [
    "CaseRow",
    "CaseEvaluation",
    "MinRatioPoint",
    "MinRatioReport",
    "LFilterComparison",
    "synthesize_grid_forming",
    "evaluate_case",
    "run_sweep",
    "wd_pole_cases",
    "run_minratio",
    "compare_l_filter",
    "l_filter_scenario",
    "loop_maps",
    "write_rows",
    "read_rows",
]


@dataclass
class CaseRow:
    """One sweep row. ``works`` joins the eigenvalue and simulation verdicts."""

    case_id: str
    gamma: float = math.nan
    achieved_norm: float = math.nan
    omega_i: float = math.nan
    omega_v: float = math.nan
    ratio: float = math.nan
    crossover_i: float = math.nan
    crossover_v: float = math.nan
    eig_stable: Optional[bool] = None
    sim_verdict: str = ""
    diverged: Optional[bool] = None
    works: Optional[bool] = None
    error: str = ""


@dataclass(eq=False)
class CaseEvaluation:
    row: CaseRow
    result: Optional[SynthesisResult] = None
    decomposition: Optional[IcovDecomposition] = None
    report: Optional[BandwidthReport] = None
    closed_loop: Optional[StateSpace] = None
    trace: Optional[ScenarioTrace] = None


def synthesize_grid_forming(
    params: GridFormingParams,
    case: WeightCase,
    delta: float = DEFAULT_DELTA,
    input_noise: bool = False,
) -> SynthesisResult:
    return hinf_synthesize(
        augment_with_case(grid_forming_plant(params), case), delta=delta, input_noise=input_noise
    )


def evaluate_case(
    params: GridFormingParams,
    case: WeightCase,
    scenario: Optional[Scenario] = None,
    omega=None,
    delta: float = DEFAULT_DELTA,
    input_noise: bool = False,
    run_simulation: bool = True,
) -> CaseEvaluation:
    """Synthesize, decompose, measure bandwidths and (optionally) simulate one case.

    Synthesis failures are recorded in ``row.error`` rather than raised.
    """
    row = CaseRow(case.case_id)
    ev = CaseEvaluation(row)
    try:
        res = synthesize_grid_forming(params, case, delta, input_noise)
    except (SynthesisError, ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return ev
    row.gamma, row.achieved_norm = res.gamma, res.achieved_norm
    d = decompose_icov(res.K, delta)
    cl = lft(grid_forming_analysis_plant(params), res.K, 1, 3)
    rep = bandwidth_ratio(d, params, cl, omega)
    row.omega_i, row.omega_v, row.ratio = rep.omega_i, rep.omega_v, rep.ratio
    row.crossover_i, row.crossover_v = rep.crossover_i, rep.crossover_v
    row.eig_stable = rep.stable
    ev.result, ev.decomposition, ev.report, ev.closed_loop = res, d, rep, cl
    if run_simulation:
        tr = simulate(cl, scenario or table1_scenario())
        row.sim_verdict = classify_stability(tr)
        row.diverged = tr.diverged
        ev.trace = tr
        row.works = bool(rep.stable and row.sim_verdict == "converged")
    else:
        row.works = bool(rep.stable)
    return ev


def run_sweep(
    params: GridFormingParams,
    cases: Sequence[WeightCase],
    scenario: Optional[Scenario] = None,
    omega=None,
    workers: int = 1,
    **kw,
) -> list[CaseEvaluation]:
    """Evaluate every case; results come back in input order."""
    job = lambda c: evaluate_case(params, c, scenario, omega, **kw)  # noqa: E731
    if workers <= 1 or len(cases) <= 1:
        return [job(c) for c in cases]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, cases))


# --- W_d pole sweep -----------------------------------------------------------


@dataclass
class MinRatioPoint:
    pole: float
    row: CaseRow


@dataclass
class MinRatioReport:
    points: list[MinRatioPoint]
    min_stable_ratio: float
    min_stable_pole: float
    contiguous: bool

    def rows(self) -> list[dict]:
        return [{"wd_pole_rad_s": p.pole, **asdict(p.row)} for p in self.points]


def wd_pole_cases(poles: Iterable[float], context, base: str = "III") -> list[WeightCase]:
    """Copies of a Table-II case with ``W_d = 1/(s/pole + 1)``."""
    doc = table2_document()
    entry = next(c for c in doc["cases"] if c["id"] == base)
    out = []
    for pole in poles:
        c = {**entry, "id": f"{base}@wd={pole:.6g}", "inputs": {"i_d": [{"type": "w_d_lowpass", "omega_p": float(pole)}]}}
        out.append(c)
    return cases_from_document({"frequencies": doc["frequencies"], "cases": out}, context)


def _contiguous(flags: Sequence[bool]) -> bool:
    idx = [k for k, f in enumerate(flags) if f]
    return not idx or idx[-1] - idx[0] + 1 == len(idx)


def run_minratio(
    params: GridFormingParams,
    poles: Sequence[float],
    scenario: Optional[Scenario] = None,
    omega=None,
    base: str = "III",
    workers: int = 1,
    **kw,
) -> MinRatioReport:
    """Sweep the ``W_d`` pole and report the smallest ratio among working points."""
    poles = sorted(float(p) for p in poles)
    cases = wd_pole_cases(poles, params.frequencies(), base)
    evs = run_sweep(params, cases, scenario, omega, workers, **kw)
    points = [MinRatioPoint(p, ev.row) for p, ev in zip(poles, evs)]
    good = [pt for pt in points if pt.row.works and math.isfinite(pt.row.ratio)]
    best = min(good, key=lambda pt: pt.row.ratio, default=None)
    return MinRatioReport(
        points=points,
        min_stable_ratio=best.row.ratio if best else math.nan,
        min_stable_pole=best.pole if best else math.nan,
        contiguous=_contiguous([bool(pt.row.works) for pt in points]),
    )


# --- L-filter comparison ------------------------------------------------------


def l_filter_scenario(record_dt: float = 1e-3) -> Scenario:
    """5 A reference, 10 A from 10 s, 120 V disturbance from 20 s, end at 30 s."""
    return Scenario(
        segments=(
            Segment(0.0, {"i_ref": SignalSpec.constant(5.0), "v_ac": SignalSpec.constant(0.0)}),
            Segment(10.0, {"i_ref": SignalSpec.constant(10.0), "v_ac": SignalSpec.constant(0.0)}),
            Segment(20.0, {"i_ref": SignalSpec.constant(10.0), "v_ac": SignalSpec.constant(120.0)}),
        ),
        t_end=30.0,
        record_dt=record_dt,
    )


@dataclass(eq=False)
class LFilterComparison:
    controllers: dict[str, StateSpace]
    traces: dict[str, ScenarioTrace]
    metrics: dict[str, dict] = field(default_factory=dict)
    synthesis: dict[str, SynthesisResult] = field(default_factory=dict)


def compare_l_filter(
    p: LFilterParams = LFilterParams(),
    omega_bw: float = 2.0 * math.pi * 100.0,
    ws: SensWeightParams = SensWeightParams(M_s=2.0, omega_b=2.0 * math.pi * 100.0, eps=1e-3),
    scenario: Optional[Scenario] = None,
    delta: float = DEFAULT_DELTA,
) -> LFilterComparison:
    """PI (inverse-based), H-infinity with first-order and with squared ``W_s1``.

    Metrics per controller: tracking error over the second before the
    disturbance (absolute and relative to the reference), error over the
    last second with the disturbance applied, overshoot of the 10 s
    reference step, and the peak control effort.
    """
    scenario = scenario or l_filter_scenario()
    P = l_filter_generalized_plant(p)
    w1 = w_s1_first_order(ws)
    controllers: dict[str, StateSpace] = {
        "pi": as_ss(pi_inverse_design(l_filter_tf(p), omega_bw)).relabel(["y_err"], ["u"])
    }
    synth = {}
    for name, w in (("hinf_ws1", w1), ("hinf_ws1_squared", cascade(w1, 2))):
        res = hinf_synthesize(
            augment_with_weights(P, W_s={"z_err": w}, W_d={"v_ac": w_d_static(p.v_ac_max)}), delta=delta
        )
        synth[name] = res
        controllers[name] = res.K
    analysis = l_filter_analysis_plant(p)
    traces, metrics = {}, {}
    for name, K in controllers.items():
        cl = lft(analysis, K, 1, 1)
        tr = simulate(cl, scenario)
        traces[name] = tr
        ref = float(tr["i_ref"][-1])
        err = steady_state_error(tr, 1.0, reference="i_ref", output="i", t_end=20.0)
        err_d = steady_state_error(tr, 1.0, reference="i_ref", output="i")
        metrics[name] = {
            "steady_state_error_A": err,
            "steady_state_error_rel": err / abs(ref),
            "disturbed_error_A": err_d,
            "overshoot_rel": overshoot(tr, 10.0, 20.0, "i", final=10.0),
            "peak_u_V": float(np.max(np.abs(tr["u"]))),
            "gamma": synth[name].gamma if name in synth else math.nan,
        }
    return LFilterComparison(controllers, traces, metrics, synth)


# --- frequency-domain products ------------------------------------------------------


def loop_maps(loop: StateSpace) -> dict[str, StateSpace]:
    """``{"L": loop, "S": 1/(1+L), "T": L/(1+L)}`` for a SISO loop gain."""
    S, T, _ = sensitivity_set(loop, as_ss(1.0))
    return {"L": loop, "S": S, "T": T}


# --- CSV ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, rows: Sequence[dict], header: Optional[Sequence[str]] = None) -> None:
    """CSV with a header row; floats written with ``repr`` so they round-trip."""
    header = list(header) if header is not None else (list(rows[0]) if rows else [f.name for f in fields(CaseRow)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in header])


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
