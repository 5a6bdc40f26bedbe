"""
Sweep Coordinator

Orchestrates a sweep run:
1. Expand the config into independent solver tasks
2. Fan the tasks out over the task queue
3. Write the result table, summary and manifest in task order
4. Record the run in the registry
"""
import json
import logging
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .. import __version__, database
from ..config import ExperimentConfig, config_hash, default_workers
from ..errors import BaselineMissing
from ..physics.magnetometry import peak_width, resolve_pump_power, response_vs_detuning, sensitivity_at_rabi
from ..physics.nv_dynamics import DriveField
from ..physics.raman_laser import laser_curve, threshold_pump
from .results import CSV_COLUMNS, Comparison, build_manifest, compare_tables, json_number, write_csv, write_json
from .task_queue import TaskQueue, TaskStatus

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    """Where a run wrote its files and how its tasks ended"""

    out_dir: Path
    csv_path: Path
    summary_path: Path
    manifest_path: Path
    tasks: List[Dict[str, Any]]
    wall_time: float
    run_id: Optional[int] = None

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [t for t in self.tasks if t["status"] != "completed"]

    @property
    def ok(self) -> bool:
        return not self.failed


@dataclass
class VerifyReport:
    """Outcome of a re-run against a baseline; the re-run's scratch files are gone"""

    comparison: Comparison
    tasks: List[Dict[str, Any]]
    wall_time: float

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [t for t in self.tasks if t["status"] != "completed"]

    @property
    def passed(self) -> bool:
        return self.comparison.passed and not self.failed


@dataclass
class _TaskOutcome:
    rows: List[List[float]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


class SweepCoordinator:
    """Runs one experiment config"""

    def __init__(self, config: ExperimentConfig, workers: Optional[int] = None, record: bool = True):
        self.config = config
        self.workers = workers or config.workers or default_workers()
        self.record = record
        self.rates = config.nv_rates()
        self._handlers = {
            "laser_curve": self._laser_curve_task,
            "response": self._response_task,
            "threshold_shift": self._threshold_shift_task,
            "sensitivity": self._sensitivity_task,
        }

    # -- task expansion --

    def sweep_points(self) -> List[Dict[str, float]]:
        """
        Parameter points in lexicographic order over the sweep indices.

        Laser curves get one task per detuning; without drive the detuning has
        no effect, so only the first one is kept.
        """
        cfg = self.config
        kappas = cfg.kappa_r.value
        rabis = cfg.drive.rabi.value
        dephasings = cfg.drive.dephasing.value

        points = []
        if cfg.kind == "laser_curve":
            detunings = cfg.detuning_grid()
            for kappa, rabi, dephasing in product(kappas, rabis, dephasings):
                for detuning in (detunings if rabi > 0 else detunings[:1]):
                    points.append({"kappa_r": kappa, "rabi": rabi, "dephasing": dephasing, "detuning": detuning})
        else:
            for kappa, rabi, dephasing in product(kappas, rabis, dephasings):
                points.append({"kappa_r": kappa, "rabi": rabi, "dephasing": dephasing})
        return points

    # -- task handlers --

    def _laser_curve_task(self, task) -> _TaskOutcome:
        p = task.data
        cavity = self.config.cavity_system(p["kappa_r"])
        drive = DriveField(rabi=p["rabi"], detuning=p["detuning"], dephasing=p["dephasing"])
        points = laser_curve(cavity, self.rates, drive, self.config.pump_grid())
        rows = [
            [p["kappa_r"], p["rabi"], p["dephasing"], p["detuning"], pt.pump_power, pt.output_power, pt.beta,
             pt.pump_rate]
            for pt in points
        ]
        return _TaskOutcome(rows, {"threshold_w": threshold_pump(cavity, self.rates, drive)})

    def _pump_power(self, cavity, dephasing: float) -> float:
        cfg = self.config
        return resolve_pump_power(cavity, self.rates, dephasing, cfg.pump.rule, cfg.pump_power())

    def _response_task(self, task) -> _TaskOutcome:
        p = task.data
        cavity = self.config.cavity_system(p["kappa_r"])
        power = self._pump_power(cavity, p["dephasing"])
        curve = response_vs_detuning(cavity, self.rates, p["rabi"], p["dephasing"], power, self.config.detuning_grid())
        rows = [
            [p["kappa_r"], p["rabi"], p["dephasing"], float(d), power, float(out)]
            for d, out in zip(curve.detunings, curve.outputs)
        ]
        return _TaskOutcome(rows, {
            "pump_power_w": power,
            "peak_output_w": float(np.max(curve.outputs)),
            "fwhm_hz": json_number(peak_width(curve)) if np.max(curve.outputs) > 0 else None,
        })

    def _threshold_shift_task(self, task) -> _TaskOutcome:
        p = task.data
        cavity = self.config.cavity_system(p["kappa_r"])
        resonant = threshold_pump(cavity, self.rates,
                                  DriveField(rabi=p["rabi"], detuning=0.0, dephasing=p["dephasing"]))
        detuned = threshold_pump(cavity, self.rates,
                                 DriveField(rabi=p["rabi"], detuning=self.config.off_resonant_detuning.value,
                                            dephasing=p["dephasing"]))
        shift = 100.0 * (detuned - resonant) / resonant
        return _TaskOutcome(
            [[p["kappa_r"], p["rabi"], p["dephasing"], resonant, detuned, shift]],
            {"threshold_resonant_w": resonant, "threshold_detuned_w": detuned, "shift_percent": shift},
        )

    def _sensitivity_task(self, task) -> _TaskOutcome:
        p = task.data
        cfg = self.config
        cavity = cfg.cavity_system(p["kappa_r"])
        power = self._pump_power(cavity, p["dephasing"])
        row = sensitivity_at_rabi(cavity, self.rates, p["rabi"], p["dephasing"], power, cfg.detuning_grid(),
                                  detection_efficiency=cfg.detection_efficiency)

        summary = {"pump_power_w": power, "status": row.status, "eta_min": None, "detuning_opt_hz": None,
                   "field_opt_t": None}
        if row.status == "ok":
            summary.update(eta_min=json_number(row.eta_min), detuning_opt_hz=row.detuning_opt,
                           field_opt_t=row.field_opt)

        rows = [
            [p["rabi"], p["dephasing"], float(d), float(out), float(eta)]
            for d, out, eta in zip(row.curve.detunings, row.curve.outputs, row.grid_etas)
        ]
        return _TaskOutcome(rows, summary)

    # -- summaries --

    def _aggregate(self, results: List[Dict[str, Any]]) -> Dict[str, Any]:
        kind = self.config.kind
        done = [r for r in results if r["status"] == "completed"]

        if kind == "threshold_shift":
            optima = []
            groups: Dict[tuple, List[Dict[str, Any]]] = {}
            for r in done:
                groups.setdefault((r["parameters"]["kappa_r"], r["parameters"]["dephasing"]), []).append(r)
            for (kappa, dephasing), members in groups.items():
                best = max(members, key=lambda r: r["summary"]["shift_percent"])
                optima.append({"kappa_r_hz": kappa, "gamma_g_hz": dephasing,
                               "rabi_opt_hz": best["parameters"]["rabi"],
                               "shift_percent_max": best["summary"]["shift_percent"]})
            return {"optimum_rabi": optima}

        if kind == "sensitivity":
            best_by_dephasing = {}
            for r in done:
                s = r["summary"]
                if s["status"] != "ok" or s["eta_min"] is None:
                    continue
                key = r["parameters"]["dephasing"]
                if key not in best_by_dephasing or s["eta_min"] < best_by_dephasing[key]["eta_min"]:
                    best_by_dephasing[key] = {"gamma_g_hz": key, "rabi_opt_hz": r["parameters"]["rabi"],
                                              "eta_min": s["eta_min"], "detuning_opt_hz": s["detuning_opt_hz"],
                                              "field_opt_t": s["field_opt_t"]}
            return {"best": [best_by_dephasing[k] for k in sorted(best_by_dephasing)]}

        return {}

    # -- registry --

    def _registry_start(self, out_dir: Path, task_count: int) -> Optional[Any]:
        if not self.record:
            return None
        try:
            database.create_tables(database.engine)
            db = database.SessionLocal()
            try:
                return database.record_run_start(db, self.config.name, self.config.kind, config_hash(self.config),
                                                  str(out_dir), task_count, __version__).id
            finally:
                db.close()
        except Exception as e:
            logger.warning(f"Run registry unavailable (non-fatal): {e}")
            return None

    def _registry_finish(self, run_id: Optional[int], tasks: List[Dict[str, Any]], wall_time: float):
        if run_id is None:
            return
        try:
            db = database.SessionLocal()
            try:
                run = db.get(database.SweepRun, run_id)
                records = [dict(t, parameters=json.dumps(t["parameters"], sort_keys=True)) for t in tasks]
                database.record_run_finish(db, run, records, wall_time)
            finally:
                db.close()
        except Exception as e:
            logger.warning(f"Could not record run {run_id} (non-fatal): {e}")

    # -- run --

    def run(self, out_dir: Optional[Union[str, Path]] = None) -> RunReport:
        """
        Execute the sweep and write `<kind>.csv`, `summary.json` and `manifest.json`.

        Failed tasks are recorded in the manifest; the remaining tasks still run.
        """
        cfg = self.config
        out_dir = Path(out_dir or cfg.output.directory)
        points = self.sweep_points()
        started = time.monotonic()
        timestamp = datetime.now(timezone.utc).isoformat()
        logger.info(f"Running {cfg.name} ({cfg.kind}): {len(points)} tasks on {self.workers} worker(s)")

        run_id = self._registry_start(out_dir, len(points))

        queue = TaskQueue(max_workers=self.workers)
        queue.register_handler(cfg.kind, self._handlers[cfg.kind])
        for point in points:
            queue.add_task(cfg.kind, point)
        tasks = queue.run_all()

        rows: List[List[float]] = []
        results: List[Dict[str, Any]] = []
        for task in tasks:
            entry = {
                "index": task.index,
                "parameters": task.data,
                "status": task.status.value,
                "error": task.error,
                "wall_time": task.wall_time,
            }
            if task.status == TaskStatus.COMPLETED:
                rows.extend(task.result.rows)
                entry["summary"] = task.result.summary
            else:
                logger.error(f"Task {task.task_id} {task.data} failed: {task.error_type}: {task.error}")
            results.append(entry)

        csv_path = write_csv(out_dir / f"{cfg.kind}.csv", CSV_COLUMNS[cfg.kind], rows)
        summary = {
            "name": cfg.name,
            "kind": cfg.kind,
            "config_hash": config_hash(cfg),
            "version": __version__,
            "tasks": [
                {"index": r["index"], "parameters": r["parameters"], "status": r["status"], **r.get("summary", {})}
                for r in results
            ],
            **self._aggregate(results),
        }
        summary_path = write_json(out_dir / "summary.json", summary)

        wall_time = time.monotonic() - started
        manifest_tasks = [{k: r[k] for k in ("index", "parameters", "status", "error", "wall_time")} for r in results]
        manifest_path = write_json(
            out_dir / "manifest.json",
            build_manifest(config_hash(cfg), cfg.kind, cfg.name, manifest_tasks, wall_time, timestamp),
        )

        self._registry_finish(run_id, manifest_tasks, wall_time)

        report = RunReport(out_dir, csv_path, summary_path, manifest_path, manifest_tasks, wall_time, run_id)
        logger.info(f"Finished {cfg.name}: {len(rows)} rows, {len(report.failed)} failed task(s), {wall_time:.2f}s")
        return report


def run(config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None, workers: Optional[int] = None,
        record: bool = True) -> RunReport:
    return SweepCoordinator(config, workers=workers, record=record).run(out_dir)


def verify(config: ExperimentConfig, baseline: Union[str, Path], rtol: Union[float, Dict[str, float]] = 1e-6,
           workers: Optional[int] = None) -> VerifyReport:
    """
    Re-run a config in a scratch directory and compare its table with a baseline.

    Raises:
        BaselineMissing: the baseline file does not exist.
    """
    baseline = Path(baseline)
    if not baseline.is_file():
        raise BaselineMissing(f"baseline not found: {baseline}")

    with tempfile.TemporaryDirectory(prefix="ramanmag-verify-") as scratch:
        report = run(config, out_dir=scratch, workers=workers, record=False)
        comparison = compare_tables(baseline, report.csv_path, rtol)

    if comparison.passed:
        logger.info(f"verify {config.name}: pass ({comparison.message})")
    else:
        logger.warning(f"verify {config.name}: FAIL at {comparison.message}")
    return VerifyReport(comparison, report.tasks, report.wall_time)
