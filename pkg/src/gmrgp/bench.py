"""Query-latency benchmark: single-query prediction cost of GMR, a
demonstration-conditioned stationary MOGP, and the via-point-conditioned
GMR-based GP, across dataset sizes N and via-point counts V.

Only scaling shapes and orderings are meaningful; absolute milliseconds are
hardware-bound.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import gp, trajectory
from .gmm import DemonstrationSet, EmConfig, fit_gmm
from .gmr import gmr_predict

__all__ = ["BenchConfig", "BenchReport", "run_bench", "reports_to_csv"]


@dataclass(frozen=True)
class BenchConfig:
    n_grid: tuple[int, ...] = (100, 1000, 10000)
    v_grid: tuple[int, ...] = (3,)
    methods: tuple[str, ...] = ("gmr", "mogp", "gmrgp")
    output_dim: int = 2
    components: int = 3
    repetitions: int = 30
    warmup: int = 5
    lengthscale: float = 0.5
    noise: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 30:
            raise ValueError("need at least 30 repetitions per cell")
        if self.warmup < 5:
            raise ValueError("need at least 5 warm-up queries per cell")


@dataclass(frozen=True)
class BenchReport:
    """Per-query latency statistics for one (method, N, V) cell."""

    method: str
    n: int
    v: int
    mean_ms: float
    std_ms: float
    count: int
    error: str | None = field(default=None, compare=False)


def _smooth_demos(n_samples: int, d: int, seed: int) -> DemonstrationSet:
    """One long smooth random trajectory: sums of low-frequency sinusoids."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 2.0, n_samples)
    amp = rng.standard_normal((4, d))
    phase = rng.uniform(0, 2 * np.pi, (4, d))
    y = sum(
        amp[k] * np.sin((k + 1) * np.pi * t[:, None] + phase[k]) for k in range(4)
    )
    y = y + 0.02 * rng.standard_normal((n_samples, d))
    return DemonstrationSet(t[:, None], y, ((0, n_samples),))


def _time_queries(predict_fn, queries: np.ndarray, reps: int, warmup: int) -> tuple[float, float]:
    for x in queries[:warmup]:
        predict_fn(x)
    times = np.empty(reps)
    for i in range(reps):
        x = queries[warmup + (i % (len(queries) - warmup))]
        t0 = time.perf_counter()
        predict_fn(x)
        times[i] = (time.perf_counter() - t0) * 1e3
    return float(times.mean()), float(times.std())


def run_bench(config: BenchConfig) -> list[BenchReport]:
    """Build the models of each grid cell and time single-query prediction.

    Cells run sequentially to avoid timer interference; per-cell failures are
    recorded on the report instead of raised.
    """
    reports = []
    rng = np.random.default_rng(config.seed)
    for n in config.n_grid:
        demos = _smooth_demos(n, config.output_dim, config.seed)
        gmm = fit_gmm(demos, config.components, EmConfig(seed=config.seed, max_iter=50))
        queries = rng.uniform(
            demos.inputs.min(), demos.inputs.max(), (config.warmup + config.repetitions, 1)
        )
        for v in config.v_grid:
            via_idx = np.linspace(0, n - 1, v).astype(int)
            for method in config.methods:
                try:
                    reports.append(
                        _bench_cell(method, gmm, demos, via_idx, queries, config, n, v)
                    )
                except MemoryError as exc:
                    reports.append(
                        BenchReport(method, n, v, float("nan"), float("nan"), 0, str(exc))
                    )
    return reports


def _bench_cell(method, gmm, demos, via_idx, queries, config, n, v) -> BenchReport:
    if method == "gmr":
        predict_fn = lambda x: gmr_predict(gmm, x)  # noqa: E731
    elif method == "gmrgp":
        model = trajectory.build(
            gmm, lengthscales=config.lengthscale, noise=config.noise
        )
        model = trajectory.adapt(
            model,
            [
                trajectory.ViaPoint(demos.inputs[i], demos.outputs[i])
                for i in via_idx
            ],
        )
        predict_fn = lambda x: gp.predict(model.engine, x)  # noqa: E731
    elif method == "mogp":
        prior = trajectory.stationary_mogp(gmm, lengthscales=config.lengthscale)
        model = gp.condition(
            prior,
            gp.ObservationSet(demos.inputs, demos.outputs, noise=config.noise),
        )
        predict_fn = lambda x: gp.predict(model, x)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    mean_ms, std_ms = _time_queries(predict_fn, queries, config.repetitions, config.warmup)
    return BenchReport(method, n, v, mean_ms, std_ms, config.repetitions)


def reports_to_csv(reports: list[BenchReport]) -> str:
    buf = io.StringIO()
    buf.write("method,n,v,mean_ms,std_ms,count,error\n")
    for r in reports:
        buf.write(
            f"{r.method},{r.n},{r.v},{repr(r.mean_ms)},{repr(r.std_ms)},{r.count},{r.error or ''}\n"
        )
    return buf.getvalue()
