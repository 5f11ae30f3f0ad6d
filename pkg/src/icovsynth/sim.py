"""Fixed-step simulation of LTI closed loops under piecewise scenarios.

Sources are constants or sinusoids in absolute time. Each is generated by a
small exosystem appended to the plant state, so the integrated system is
autonomous and linear. One classical Runge-Kutta step of ``x' = M x`` is the
matrix polynomial ``I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24``; ``N`` steps
between two recorded samples are that matrix raised to the ``N``-th power.
This keeps very fast (stiff) controller modes resolved at the required step
size without paying for every step in Python.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .lti import StateSpace

__all__ = [
    "SignalSpec",
    "Segment",
    "Scenario",
    "ScenarioTrace",
    "UnderResolvedError",
    "simulate",
    "rk4_step_matrix",
    "default_dt",
    "steady_state_error",
    "classify_stability",
    "settling_time",
    "overshoot",
    "phasor",
    "table1_scenario",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "OMEGA_FUNDAMENTAL",
    "DT_MAX",
]

OMEGA_FUNDAMENTAL = 2.0 * math.pi * 60.0
DT_MAX = 1e-5
DIVERGENCE_FACTOR = 1e6


class UnderResolvedError(ValueError):
    """The requested step is too coarse for the fastest mode."""


@dataclass(frozen=True)
class SignalSpec:
    """``constant``: ``value``; ``sinusoid``: ``amplitude sin(omega t + phase)``;
    ``step``: ``initial`` before ``t_step`` and ``value`` from then on.

    Time is absolute, so a sinusoid keeps its phase across segments.
    """

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    t_step: float = 0.0
    initial: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "step"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "sinusoid" and not self.omega > 0:
            raise ValueError("sinusoid needs omega > 0")

    @classmethod
    def constant(cls, value: float) -> "SignalSpec":
        return cls("constant", value=float(value))

    @classmethod
    def sinusoid(cls, amplitude: float, omega: float, phase: float = 0.0) -> "SignalSpec":
        return cls("sinusoid", amplitude=float(amplitude), omega=float(omega), phase=float(phase))

    @classmethod
    def step(cls, t_step: float, value: float, initial: float = 0.0) -> "SignalSpec":
        return cls("step", value=float(value), t_step=float(t_step), initial=float(initial))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(self.omega * t + self.phase)
        return np.where(t < self.t_step, self.initial, self.value)

    @property
    def peak(self) -> float:
        if self.kind == "sinusoid":
            return abs(self.amplitude)
        if self.kind == "step":
            return max(abs(self.value), abs(self.initial))
        return abs(self.value)


@dataclass(frozen=True)
class Segment:
    t_start: float
    signals: Mapping[str, SignalSpec]


@dataclass(frozen=True)
class Scenario:
    """Time-ordered segments; each holds one signal per source name.

    ``dt`` is the integration step (``None`` picks :func:`default_dt`);
    ``record_dt`` is the spacing of the recorded trace and must be a
    multiple of the step actually used (the step is shrunk to fit).
    """

    segments: tuple[Segment, ...]
    t_end: float
    dt: Optional[float] = None
    record_dt: float = DT_MAX

    def __post_init__(self):
        if not self.segments:
            raise ValueError("scenario needs at least one segment")
        starts = [s.t_start for s in self.segments]
        if starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segments must start at 0 and be strictly time-ordered")
        if not self.t_end > starts[-1]:
            raise ValueError("t_end must follow the last segment start")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.record_dt > 0:
            raise ValueError("record_dt must be positive")

    @property
    def names(self) -> list[str]:
        out: list[str] = []
        for seg in self.segments:
            out += [k for k in seg.signals if k not in out]
        return out

    @property
    def peak(self) -> float:
        return max((s.peak for seg in self.segments for s in seg.signals.values()), default=0.0)

    def segment_bounds(self) -> list[tuple[float, float]]:
        starts = [s.t_start for s in self.segments] + [self.t_end]
        return list(zip(starts[:-1], starts[1:]))

    def _split(self) -> list[tuple[float, float, dict]]:
        """Segments with in-segment steps expanded into constant pieces."""
        pieces = []
        for (t0, t1), seg in zip(self.segment_bounds(), self.segments):
            cuts = sorted({t0, *[s.t_step for s in seg.signals.values() if s.kind == "step" and t0 < s.t_step < t1]})
            for a, b in zip(cuts, cuts[1:] + [t1]):
                sig = {}
                for name, s in seg.signals.items():
                    sig[name] = SignalSpec.constant(float(s(a))) if s.kind == "step" else s
                pieces.append((a, b, sig))
        return pieces


@dataclass(eq=False)
class ScenarioTrace:
    """Recorded series on a common time grid.

    If the run diverged, the series stop at the first recorded sample past
    the bound and ``divergence_time`` is that sample's time.
    """

    t: np.ndarray
    signals: dict[str, np.ndarray]
    diverged: bool = False
    divergence_time: Optional[float] = None
    segment_starts: tuple[float, ...] = ()
    dt: float = math.nan
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.signals.items():
            if len(v) != len(self.t):
                raise ValueError(f"series {k!r} has {len(v)} samples, t has {len(self.t)}")
        if self.diverged and self.divergence_time is None:
            raise ValueError("a diverged trace needs a divergence time")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.signals[name]

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask of samples with ``t0 <= t <= t1`` (with a tiny slack)."""
        eps = 1e-9 * max(1.0, abs(t1))
        return (self.t >= t0 - eps) & (self.t <= t1 + eps)

    def to_csv(self, path) -> None:
        names = list(self.signals)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", *names])
            cols = [self.t] + [self.signals[k] for k in names]
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "ScenarioTrace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        return cls(t=data[:, 0], signals={k: data[:, j + 1] for j, k in enumerate(header[1:])})


# --- integration ------------------------------------------------------------


def rk4_step_matrix(M: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = M x`` as a matrix."""
    n = M.shape[0]
    hM = h * M
    P = np.eye(n) + hM / 4.0
    P = np.eye(n) + hM @ P / 3.0
    P = np.eye(n) + hM @ P / 2.0
    return np.eye(n) + hM @ P


def _fastest(sys: StateSpace, scenario: Scenario) -> float:
    lam = np.abs(np.linalg.eigvals(sys.A)).max() if sys.n_states else 0.0
    om = max((s.omega for seg in scenario.segments for s in seg.signals.values()), default=0.0)
    return max(lam, om)


def default_dt(sys: StateSpace, scenario: Scenario) -> float:
    """``min(1e-5, 1/(20 |lambda_max|))``."""
    lam = _fastest(sys, scenario)
    return DT_MAX if lam == 0 else min(DT_MAX, 1.0 / (20.0 * lam))


def _exosystem(names: Sequence[str], signals: Mapping[str, SignalSpec], t0: float):
    """``(A_e, C_e, z0)`` generating all sources from state ``z`` at time ``t0``."""
    blocks, rows, z0 = [], [], []
    m = len(names)
    for k, name in enumerate(names):
        s = signals.get(name, SignalSpec.constant(0.0))
        if s.kind == "sinusoid":
            w = s.omega
            blocks.append(np.array([[0.0, w], [-w, 0.0]]))
            c = np.zeros((m, 2))
            c[k, 0] = s.amplitude
            rows.append(c)
            z0 += [math.sin(w * t0 + s.phase), math.cos(w * t0 + s.phase)]
        else:
            blocks.append(np.zeros((1, 1)))
            c = np.zeros((m, 1))
            c[k, 0] = 1.0
            rows.append(c)
            z0.append(float(s(t0)))
    ne = sum(b.shape[0] for b in blocks)
    Ae = np.zeros((ne, ne))
    i = 0
    for b in blocks:
        j = b.shape[0]
        Ae[i : i + j, i : i + j] = b
        i += j
    Ce = np.hstack(rows) if rows else np.zeros((m, 0))
    return Ae, Ce, np.array(z0)


def _round_to_grid(t: float, h: float, what: str) -> int:
    k = round(t / h)
    if abs(k * h - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"{what} {t:g} s is not a multiple of the record step {h:g} s")
    return int(k)


def simulate(
    closed_loop: StateSpace,
    sc: Scenario,
    x0=None,
    bound: Optional[float] = None,
) -> ScenarioTrace:
    """Integrate ``x' = A x + B w(t)`` and record ``y = C x + D w`` and ``w``.

    Parameters
    ----------
    closed_loop
        System whose input labels are the scenario's source names.
    sc
        Scenario. Segment starts and ``t_end`` must lie on the record grid.
    x0
        Initial state (zeros by default).
    bound
        Divergence threshold on the state magnitude; defaults to
        ``1e6 * max(1, peak source amplitude)``.

    Raises
    ------
    ValueError
        Source names do not match the inputs, or times are off the grid.
    UnderResolvedError
        ``sc.dt`` exceeds ``1/(10 |lambda_max|)``.
    """
    names = list(closed_loop.input_labels)
    missing = set(names) - set(sc.names)
    unknown = set(sc.names) - set(names)
    if missing or unknown:
        raise ValueError(f"scenario sources {sorted(sc.names)} do not match system inputs {names}")
    lam = _fastest(closed_loop, sc)
    if sc.dt is not None and lam > 0 and sc.dt > 1.0 / (10.0 * lam):
        raise UnderResolvedError(
            f"dt={sc.dt:g} s exceeds 1/(10*{lam:.4g} rad/s); the fastest mode is under-resolved"
        )
    dt_req = sc.dt if sc.dt is not None else default_dt(closed_loop, sc)
    rec = max(sc.record_dt, dt_req)
    steps = max(1, math.ceil(rec / dt_req - 1e-9))
    h = rec / steps
    n = closed_loop.n_states
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    bound = DIVERGENCE_FACTOR * max(1.0, sc.peak) if bound is None else float(bound)
    A, B, C, D = closed_loop.A, closed_loop.B, closed_loop.C, closed_loop.D

    k_end = _round_to_grid(sc.t_end, rec, "t_end")
    ys = np.full((k_end + 1, closed_loop.n_outputs), np.nan)
    ws = np.full((k_end + 1, len(names)), np.nan)
    diverged, t_div, last = False, None, k_end
    for t0, t1, sig in sc._split():
        k0, k1 = _round_to_grid(t0, rec, "segment start"), _round_to_grid(t1, rec, "segment end")
        Ae, Ce, z = _exosystem(names, sig, t0)
        ne = Ae.shape[0]
        M = np.block([[A, B @ Ce], [np.zeros((ne, n)), Ae]])
        Phi = np.linalg.matrix_power(rk4_step_matrix(M, h), steps)
        s = np.concatenate([x, z])
        for k in range(k0, k1 + 1):
            if k > k0:
                s = Phi @ s
            xs, w = s[:n], Ce @ s[n:]
            ys[k] = C @ xs + D @ w
            ws[k] = w
            if not np.all(np.isfinite(xs)) or (n and np.max(np.abs(xs)) > bound):
                diverged, t_div, last = True, k * rec, k
                break
        x = s[:n]
        if diverged:
            break
    t = np.arange(last + 1) * rec
    signals = {lab: ys[: last + 1, j] for j, lab in enumerate(closed_loop.output_labels)}
    for j, lab in enumerate(names):
        signals.setdefault(lab, ws[: last + 1, j])
    return ScenarioTrace(
        t=t,
        signals=signals,
        diverged=diverged,
        divergence_time=t_div,
        segment_starts=tuple(s.t_start for s in sc.segments),
        dt=h,
        meta={"record_dt": rec, "steps_per_record": steps, "bound": bound},
    )


# --- metrics ---------------------------------------------------------------


def _error(trace: ScenarioTrace, reference: str, output: str) -> np.ndarray:
    return trace[reference] - trace[output]


def steady_state_error(
    trace: ScenarioTrace,
    window: float,
    reference: str = "v_star",
    output: str = "v",
    t_end: Optional[float] = None,
) -> float:
    """Mean ``|reference - output|`` over the ``window`` seconds ending at ``t_end``.

    ``t_end`` defaults to the end of the trace.

    Raises
    ------
    ValueError
        Diverged trace, or the window straddles a segment start.
    """
    if trace.diverged:
        raise ValueError("steady-state error of a diverged trace is undefined")
    t_end = float(trace.t[-1]) if t_end is None else float(t_end)
    starts = [s for s in trace.segment_starts if s < t_end - 1e-12]
    if starts and t_end - window < starts[-1] - 1e-12:
        raise ValueError("window must lie inside one segment")
    m = trace.window(t_end - window, t_end)
    return float(np.mean(np.abs(_error(trace, reference, output)[m])))


def classify_stability(
    trace: ScenarioTrace,
    reference: str = "v_star",
    output: str = "v",
    window: Optional[float] = None,
    threshold: float = 0.05,
) -> str:
    """``"diverged"``, ``"oscillatory"`` or ``"converged"``.

    Oscillatory means the peak-to-peak error over the trailing window exceeds
    ``threshold`` times the reference peak in that window. The window
    defaults to two fundamental cycles (or a tenth of the run if shorter).
    """
    if trace.diverged:
        return "diverged"
    t_end = trace.t[-1]
    if window is None:
        window = min(2.0 * 2.0 * math.pi / OMEGA_FUNDAMENTAL, 0.1 * t_end)
    m = trace.window(t_end - window, t_end)
    e = _error(trace, reference, output)[m]
    ref = max(np.max(np.abs(trace[reference][m])), 1e-300)
    return "oscillatory" if np.ptp(e) > threshold * ref else "converged"


def settling_time(
    trace: ScenarioTrace,
    t_event: float,
    t_until: float,
    band: float,
    reference: str = "v_star",
    output: str = "v",
) -> float:
    """Time after ``t_event`` beyond which ``|error| <= band`` up to ``t_until``.

    Returns ``inf`` if the error is still outside the band at ``t_until``.
    """
    m = trace.window(t_event, t_until)
    t, e = trace.t[m], np.abs(_error(trace, reference, output)[m])
    out = np.flatnonzero(e > band)
    if out.size == 0:
        return 0.0
    if out[-1] == len(t) - 1:
        return math.inf
    return float(t[out[-1] + 1] - t_event)


def overshoot(trace: ScenarioTrace, t0: float, t1: float, output: str, final: Optional[float] = None) -> float:
    """Peak excursion beyond the final value in ``[t0, t1]``, relative to the step size.

    The step is measured from the value at ``t0``; ``final`` defaults to
    the value at ``t1``. Returns 0 for a monotone response.
    """
    m = trace.window(t0, t1)
    y = trace[output][m]
    y_final = y[-1] if final is None else final
    step = y_final - y[0]
    if step == 0:
        return 0.0
    excess = (y - y_final) * math.copysign(1.0, step)
    return float(max(0.0, excess.max()) / abs(step))


def phasor(trace: ScenarioTrace, name: str, omega: float, t0: float, t1: float) -> complex:
    """Least-squares complex amplitude ``X`` with ``x(t) ~ Im(X e^{j omega t})``."""
    m = trace.window(t0, t1)
    t, x = trace.t[m], trace[name][m]
    basis = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    (a, b, _), *_ = np.linalg.lstsq(basis, x, rcond=None)
    return complex(a, b)


# --- scenario files -------------------------------------------------------------


def table1_scenario(omega: float = OMEGA_FUNDAMENTAL, record_dt: float = DT_MAX) -> Scenario:
    """Voltage reference 150 V then 180 V at 0.1 s; 5 A load-current injection at 0.2 s.

    Both are 60 Hz sinusoids in phase; values are peak amplitudes.
    """
    v = lambda a: SignalSpec.sinusoid(a, omega)  # noqa: E731
    i = lambda a: SignalSpec.sinusoid(a, omega) if a else SignalSpec.constant(0.0)  # noqa: E731
    return Scenario(
        segments=(
            Segment(0.0, {"v_star": v(150.0), "i_d": i(0.0)}),
            Segment(0.1, {"v_star": v(180.0), "i_d": i(0.0)}),
            Segment(0.2, {"v_star": v(180.0), "i_d": i(5.0)}),
        ),
        t_end=0.5,
        record_dt=record_dt,
    )


def _signal_to_dict(s: SignalSpec):
    if s.kind == "constant":
        return s.value
    if s.kind == "sinusoid":
        return {"type": "sinusoid", "amplitude": s.amplitude, "omega_rad_s": s.omega, "phase_rad": s.phase}
    return {"type": "step", "t_step_s": s.t_step, "value": s.value, "initial": s.initial}


def _signal_from_dict(v) -> SignalSpec:
    if isinstance(v, (int, float)):
        return SignalSpec.constant(float(v))
    kind = v.get("type", "constant")
    if kind == "constant":
        return SignalSpec.constant(float(v["value"]))
    if kind == "sinusoid":
        return SignalSpec.sinusoid(float(v["amplitude"]), float(v["omega_rad_s"]), float(v.get("phase_rad", 0.0)))
    if kind == "step":
        return SignalSpec.step(float(v["t_step_s"]), float(v["value"]), float(v.get("initial", 0.0)))
    raise ValueError(f"unknown signal type {kind!r}")


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {
        "t_end_s": sc.t_end,
        "record_dt_s": sc.record_dt,
        "rows": [
            {"t_start_s": seg.t_start, **{k: _signal_to_dict(v) for k, v in seg.signals.items()}}
            for seg in sc.segments
        ],
    }
    if sc.dt is not None:
        doc["dt_s"] = sc.dt
    return doc


def scenario_from_dict(doc: Mapping) -> Scenario:
    """Rows of ``t_start_s`` plus one entry per source (a number means a constant)."""
    segs = []
    for row in doc["rows"]:
        sig = {k: _signal_from_dict(v) for k, v in row.items() if k != "t_start_s"}
        segs.append(Segment(float(row["t_start_s"]), sig))
    return Scenario(
        segments=tuple(segs),
        t_end=float(doc["t_end_s"]),
        dt=float(doc["dt_s"]) if doc.get("dt_s") is not None else None,
        record_dt=float(doc.get("record_dt_s", DT_MAX)),
    )


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
