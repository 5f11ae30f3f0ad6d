"""Command-line runner: ``icovsynth {synth,compare-l,sweep,minratio}``.

Exit codes: 0 success, 2 configuration error, 3 synthesis infeasible,
4 certification failure, 5 self-check failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments as ex
from .lti import default_grid, freq_response
from .multiloop import inner_loop_gain, outer_loop_gain
from .plants import GridFormingParams, LFilterParams, load_params
from .sim import Scenario, load_scenario, table1_scenario
from .synth import DEFAULT_DELTA, CertificationError, HinfInfeasibleError, NotStabilizableError, SynthesisError
from .weights import WeightCase, load_weight_cases

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATION = 4
EXIT_SELFCHECK = 5


class ConfigError(Exception):
    pass


def data_file(name: str) -> Path:
    """Path of a file shipped in ``icovsynth/data``."""
    return Path(str(resources.files("icovsynth") / "data" / name))


@dataclass
class ExperimentConfig:
    plant_file: Path
    weights_file: Path
    scenario_file: Optional[Path]
    out_dir: Path
    grid: tuple[float, float, int]
    delta: float = DEFAULT_DELTA
    input_noise: bool = False

    @property
    def omega(self) -> np.ndarray:
        return default_grid(*self.grid)

    def grid_forming(self) -> GridFormingParams:
        return self._plant(GridFormingParams, "grid_forming")

    def l_filter(self) -> LFilterParams:
        return self._plant(LFilterParams, "l_filter")

    def _plant(self, cls, kind: str):
        try:
            doc = load_params(self.plant_file)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read plant file {self.plant_file}: {exc}") from exc
        if isinstance(doc, cls):
            return doc
        if isinstance(doc, dict) and kind in doc:
            return doc[kind]
        raise ConfigError(f"plant file {self.plant_file} has no {kind!r} record")

    def cases(self) -> list[WeightCase]:
        try:
            return load_weight_cases(self.weights_file, self.grid_forming().frequencies())
        except ConfigError:
            raise
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read weight file {self.weights_file}: {exc}") from exc

    def scenario(self) -> Scenario:
        if self.scenario_file is None:
            return table1_scenario()
        try:
            return load_scenario(self.scenario_file)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read scenario file {self.scenario_file}: {exc}") from exc


def _parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, ppd = text.split(":")
        grid = (float(lo), float(hi), int(ppd))
        default_grid(*grid)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:ppd with 0 < lo < hi ({exc})") from None
    return grid


def _parse_poles(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if not (0 < lo <= hi) or n < 1:
            raise ValueError("need 0 < lo <= hi and n >= 1")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"poles must be lo:hi:n ({exc})") from None
    return np.array([lo]) if n == 1 else np.logspace(math.log10(lo), math.log10(hi), n)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icovsynth", description="H-infinity synthesis experiments for inverter current and voltage control.")
    ap.add_argument("--seed-check", action="store_true", help="run the oracle self-checks and exit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--plant", type=Path, default=data_file("reference_plants.json"), help="plant parameter JSON")
    common.add_argument("--weights", type=Path, default=data_file("table2_weights.json"), help="weight-case JSON")
    common.add_argument("--scenario", type=Path, default=None, help="scenario JSON (default: Table I)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--grid", type=_parse_grid, default=(1e-2, 1e7, 200), help="lo:hi:ppd in rad/s")
    common.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="regularization level")
    common.add_argument(
        "--input-noise", action="store_true", help="also regularize with a disturbance at the control input"
    )
    common.add_argument("--workers", type=int, default=1, help="threads for sweeps")
    sub = ap.add_subparsers(dest="command")
    s = sub.add_parser("synth", parents=[common], help="synthesize one weight case")
    s.add_argument("--case", default=None, help="case id (default: the first case in the file)")
    sub.add_parser("compare-l", parents=[common], help="PI vs H-infinity on the L filter")
    sw = sub.add_parser("sweep", parents=[common], help="all weight cases")
    sw.add_argument("--traces", action="store_true", help="write a time-series CSV per case")
    mr = sub.add_parser("minratio", parents=[common], help="sweep the W_d pole")
    mr.add_argument("--poles", type=_parse_poles, default=_parse_poles("1e-4:3147:9"), help="lo:hi:n, log-spaced")
    mr.add_argument("--base", default="III", help="weight case whose W_d is replaced")
    return ap


def _config(ns) -> ExperimentConfig:
    for label, path in (("plant", ns.plant), ("weights", ns.weights), ("scenario", ns.scenario)):
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"{label} file not found: {path}")
    try:
        ns.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {ns.out}: {exc}") from exc
    return ExperimentConfig(ns.plant, ns.weights, ns.scenario, ns.out, ns.grid, ns.delta, ns.input_noise)


def _write_text(path: Path, lines: Sequence[str]) -> None:
    path.write_text("\n".join(lines) + "\n")


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def cmd_synth(cfg: ExperimentConfig, case_id: Optional[str] = None) -> int:
    cases = cfg.cases()
    if not cases:
        raise ConfigError("weight file has no cases")
    case = cases[0] if case_id is None else next((c for c in cases if c.case_id == case_id), None)
    if case is None:
        raise ConfigError(f"no case {case_id!r} in {cfg.weights_file}")
    p = cfg.grid_forming()
    res = ex.synthesize_grid_forming(p, case, cfg.delta, cfg.input_noise)
    out = cfg.out_dir
    res.save(out / "controller.json")
    ex.write_rows(out / "bisection.csv", [asdict(t) for t in res.iterations], ["gamma", "feasible", "reason"])
    omega = cfg.omega
    freq_response(res.K, omega).to_csv(out / "bode_K.csv")
    ev = ex.evaluate_case(p, case, omega=omega, delta=cfg.delta, input_noise=cfg.input_noise, run_simulation=False)
    d = ev.decomposition
    loops = {"inner": inner_loop_gain(d, p)}
    if d.K_v_equiv is not None:
        loops["outer"] = outer_loop_gain(d, p)
    for name, loop in loops.items():
        for key, g in ex.loop_maps(loop).items():
            freq_response(g, omega).to_csv(out / f"bode_{key}_{name}.csv")
    r = ev.row
    _write_text(
        out / "report.txt",
        [
            f"case {case.case_id}",
            f"gamma {res.gamma:.6g}",
            f"closed-loop norm {res.achieved_norm:.6g}",
            f"certified {res.achieved_norm <= res.gamma * 1.01}",
            f"controller order {res.K.n_states}",
            f"omega_i {_fmt(r.omega_i)} rad/s",
            f"omega_v {_fmt(r.omega_v)} rad/s",
            f"ratio {_fmt(r.ratio)}",
            f"closed loop stable {r.eig_stable}",
            f"regularization {json.dumps(res.regularization)}",
        ],
    )
    print(f"case {case.case_id}: gamma={res.gamma:.6g} norm={res.achieved_norm:.6g} ratio={_fmt(r.ratio)}")
    return EXIT_OK


def cmd_compare_l(cfg: ExperimentConfig) -> int:
    cmp = ex.compare_l_filter(cfg.l_filter(), delta=cfg.delta)
    out = cfg.out_dir
    rows = []
    for name, tr in cmp.traces.items():
        tr.to_csv(out / f"trace_{name}.csv")
        rows.append({"controller": name, **cmp.metrics[name]})
    header = ["controller", *next(iter(cmp.metrics.values()))]
    ex.write_rows(out / "metrics.csv", rows, header)
    lines = [f"{r['controller']}: " + ", ".join(f"{k}={_fmt(r[k])}" for k in header[1:]) for r in rows]
    _write_text(out / "report.txt", lines)
    print("\n".join(lines))
    return EXIT_OK


def _row_dicts(evs) -> list[dict]:
    return [asdict(ev.row) for ev in evs]


def cmd_sweep(cfg: ExperimentConfig, workers: int = 1, traces: bool = False) -> int:
    cases = cfg.cases()
    p = cfg.grid_forming()
    sc = cfg.scenario()
    evs = ex.run_sweep(p, cases, sc, cfg.omega, workers, delta=cfg.delta, input_noise=cfg.input_noise)
    ex.write_rows(cfg.out_dir / "sweep.csv", _row_dicts(evs))
    lines = []
    for ev in evs:
        r = ev.row
        if r.error:
            lines.append(f"{r.case_id}: failed ({r.error})")
            continue
        verdict = "YES" if r.works else "NO"
        lines.append(f"{r.case_id}: gamma={r.gamma:.6g} ratio={_fmt(r.ratio)} stable={r.eig_stable} sim={r.sim_verdict} works={verdict}")
        if traces and ev.trace is not None:
            ev.trace.to_csv(cfg.out_dir / f"trace_{r.case_id}.csv")
    lines = lines or ["no cases"]
    _write_text(cfg.out_dir / "report.txt", lines)
    print("\n".join(lines))
    return EXIT_OK


def cmd_minratio(cfg: ExperimentConfig, poles, base: str = "III", workers: int = 1) -> int:
    p = cfg.grid_forming()
    rep = ex.run_minratio(
        p, poles, cfg.scenario(), cfg.omega, base, workers, delta=cfg.delta, input_noise=cfg.input_noise
    )
    rows = rep.rows()
    ex.write_rows(cfg.out_dir / "minratio.csv", rows, list(rows[0]) if rows else None)
    lines = [
        f"W_d pole {pt.pole:.6g} rad/s: gamma={_fmt(pt.row.gamma)} ratio={_fmt(pt.row.ratio)} works={pt.row.works}"
        for pt in rep.points
    ]
    lines += [
        f"working region contiguous: {rep.contiguous}",
        f"smallest working ratio: {_fmt(rep.min_stable_ratio)} (W_d pole {_fmt(rep.min_stable_pole)} rad/s)",
        "this minimum is specific to the configured plant",
    ]
    _write_text(cfg.out_dir / "report.txt", lines)
    print("\n".join(lines))
    return EXIT_OK


def _seed_check() -> int:
    from .selfcheck import run_all

    results = run_all()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_SELFCHECK


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if ns.seed_check:
        return _seed_check()
    if ns.command is None:
        ap.print_help()
        return EXIT_CONFIG
    try:
        cfg = _config(ns)
        if ns.command == "synth":
            return cmd_synth(cfg, ns.case)
        if ns.command == "compare-l":
            return cmd_compare_l(cfg)
        if ns.command == "sweep":
            return cmd_sweep(cfg, ns.workers, ns.traces)
        return cmd_minratio(cfg, ns.poles, ns.base, ns.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HinfInfeasibleError, NotStabilizableError) as exc:
        print(f"synthesis infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except SynthesisError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
