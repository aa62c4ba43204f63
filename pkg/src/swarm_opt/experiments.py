"""Multi-seed statistics, serial-vs-parallel timing and result export."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig
from .swarm import Evaluator, RunRecord, run

log = logging.getLogger(__name__)

STATS_COLUMNS = ["objective", "algorithm", "runs", "min", "max", "median", "average"]
TIMING_COLUMNS = ["t_seri", "t_para", "saved_pct", "speedup", "workers", "eval_cost"]


def _mean(values: list) -> float:
    try:
        return statistics.fmean(values)
    except OverflowError:  # values near the float maximum
        return math.fsum(v / len(values) for v in values)


def _median(values: list) -> float:
    s = sorted(values)
    mid = len(s) // 2
    if len(s) % 2:
        return s[mid]
    m = (s[mid - 1] + s[mid]) / 2
    return m if math.isfinite(m) else s[mid - 1] / 2 + s[mid] / 2


@dataclass
class StatsSummary:
    objective: str
    algorithm: str
    runs: int
    min: float
    max: float
    median: float
    average: float
    seeds: list = field(default_factory=list)
    values: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, objective: str, algorithm: str, seeds: Sequence[int],
                    values: Sequence[float], config: Optional[dict] = None) -> "StatsSummary":
        if not values:
            raise ValueError("need at least one run")
        values = [float(v) for v in values]
        return cls(objective, algorithm, len(values), min(values), max(values),
                   _median(values), _mean(values),
                   list(seeds), values, dict(config or {}))

    def row(self) -> list:
        return [self.objective, self.algorithm, self.runs,
                *(repr(v) for v in (self.min, self.max, self.median, self.average))]


@dataclass
class TimingReport:
    t_seri: float
    t_para: float
    saved_pct: float
    speedup: float
    workers: int
    eval_cost: float

    @classmethod
    def from_times(cls, t_seri: float, t_para: float, workers: int, eval_cost: float) -> "TimingReport":
        return cls(t_seri, t_para, (t_seri - t_para) / t_seri * 100.0, t_seri / t_para,
                   workers, eval_cost)

    def consistent(self, rel: float = 1e-12) -> bool:
        """Recompute the derived fields from the raw times and compare."""
        ref = TimingReport.from_times(self.t_seri, self.t_para, self.workers, self.eval_cost)
        return (abs(ref.speedup - self.speedup) <= rel * abs(ref.speedup)
                and abs(ref.saved_pct - self.saved_pct) <= rel * max(1.0, abs(ref.saved_pct)))

    def row(self) -> list:
        return [repr(self.t_seri), repr(self.t_para), repr(self.saved_pct), repr(self.speedup),
                self.workers, repr(self.eval_cost)]


def _run_seeds(cfg: RunConfig, seeds: Sequence[int], ev: Evaluator) -> list[RunRecord]:
    params, obj = cfg.params(), cfg.objective_spec()
    records = []
    for s in seeds:
        sched = replace(cfg, seed=s).topology_schedule() if cfg.algorithm == "mco" else None
        rec = run(params, obj, sched, s, evaluator=ev)
        log.info("%s/%s seed=%d best=%.6g iters=%d", cfg.objective, cfg.algorithm, s,
                 rec.best_value, rec.iterations)
        records.append(rec)
    return records


def run_trials(cfg: RunConfig, seeds: Sequence[int], workers: Optional[int] = None,
               records: Optional[list] = None) -> StatsSummary:
    """Run one seeded trial per seed and summarise the final best values.

    Pass a list as ``records`` to also collect the individual runs.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("run_trials needs at least one seed")
    w = workers if workers is not None else cfg.resolved_workers
    with Evaluator(cfg.objective_spec(), w) as ev:
        recs = _run_seeds(cfg, seeds, ev)
    if records is not None:
        records.extend(recs)
    return StatsSummary.from_values(cfg.objective, cfg.algorithm, seeds,
                                    [r.best_value for r in recs], cfg.to_dict())


def _timed(cfg: RunConfig, seeds: Sequence[int], workers: int) -> tuple[float, list]:
    with Evaluator(cfg.objective_spec(), workers) as ev:
        # start the pool before the clock so only the workload is timed
        ev(cfg.objective_spec().lower[None, :].repeat(workers, axis=0))
        start = time.perf_counter()
        recs = _run_seeds(cfg, seeds, ev)
        elapsed = time.perf_counter() - start
    return elapsed, [r.best_value for r in recs]


def timing_compare(cfg: RunConfig, workers: int, seeds: Optional[Sequence[int]] = None) -> TimingReport:
    """Time the same seeded workload at one worker and at ``workers``.

    Raises RuntimeError if the two runs disagree on any best value.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    seeds = [cfg.seed] if seeds is None else list(seeds)
    t_seri, base = _timed(cfg, seeds, 1)
    t_para, vals = _timed(cfg, seeds, workers)
    if vals != base:
        raise RuntimeError("serial and parallel runs produced different results")
    return TimingReport.from_times(t_seri, t_para, workers, cfg.eval_cost)


def scalability_sweep(cfg: RunConfig, worker_list: Sequence[int],
                      seeds: Optional[Sequence[int]] = None) -> list[TimingReport]:
    """One report per worker count against a single serial baseline.

    The ``workers=1`` entry reuses the baseline, so its speedup is exactly 1.
    """
    worker_list = list(worker_list)
    if not worker_list:
        raise ValueError("worker list must be nonempty")
    if any(w < 1 for w in worker_list):
        raise ValueError("worker counts must be >= 1")
    seeds = [cfg.seed] if seeds is None else list(seeds)
    t_seri, base = _timed(cfg, seeds, 1)
    reports = []
    for w in worker_list:
        if w == 1:
            t_para = t_seri
        else:
            t_para, vals = _timed(cfg, seeds, w)
            if vals != base:
                raise RuntimeError(f"results at {w} workers differ from the serial baseline")
        reports.append(TimingReport.from_times(t_seri, t_para, w, cfg.eval_cost))
    return reports


# --- export / import -------------------------------------------------------

def _as_list(items):
    return list(items) if isinstance(items, (list, tuple)) else [items]


def render(items, fmt: str) -> str:
    """Serialise StatsSummary or TimingReport objects (one or a list)."""
    items = _as_list(items)
    if not items:
        raise ValueError("nothing to export")
    kind = type(items[0])
    if any(type(it) is not kind for it in items):
        raise ValueError("cannot mix summaries and timing reports in one export")
    if fmt == "json":
        return json.dumps([asdict(it) for it in items], indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS if kind is StatsSummary else TIMING_COLUMNS)
    for it in items:
        w.writerow(it.row())
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                                   prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        Path(tmp).unlink(missing_ok=True)
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt
    suffix = Path(path).suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json") else "json"


def export(items, path, fmt: Optional[str] = None) -> None:
    write_atomic(path, render(items, _infer_format(path, fmt)))


def _parse_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    header, body = rows[0], rows[1:]
    if header == STATS_COLUMNS:
        return [StatsSummary(r[0], r[1], int(r[2]), *map(float, r[3:7])) for r in body]
    if header == TIMING_COLUMNS:
        return [TimingReport(float(r[0]), float(r[1]), float(r[2]), float(r[3]), int(r[4]), float(r[5]))
                for r in body]
    raise ValueError(f"unrecognised CSV header {header}")


def load(path, fmt: Optional[str] = None) -> list:
    """Read back what :func:`export` wrote."""
    fmt = _infer_format(path, fmt)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    if fmt == "csv":
        return _parse_csv(text)
    out = []
    for d in json.loads(text):
        out.append(TimingReport(**d) if "t_seri" in d else StatsSummary(**d))
    return out
