"""Demonstration file I/O and synthetic demonstration generators.

File format: CSV with header ``demo,in_0,...,in_{Din-1},out_0,...,out_{D-1}``.
Rows of one demonstration carry the same contiguous ``demo`` id. Values are
64-bit floats written with shortest round-trip decimals.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import NonFiniteInputError, ParseError, RaggedDemoError
from .gmm import DemonstrationSet, GaussianComponent, GmmModel, sample_joint
from .gmr import gmr_predict

__all__ = [
    "load_demonstrations",
    "save_demonstrations",
    "generate_synthetic",
    "two_component_toy_gmm",
]


def save_demonstrations(demos: DemonstrationSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["demo"]
            + [f"in_{i}" for i in range(demos.input_dim)]
            + [f"out_{i}" for i in range(demos.output_dim)]
        )
        for demo_id in range(demos.num_demos):
            xs, ys = demos.demo(demo_id)
            for x, y in zip(xs, ys):
                writer.writerow([demo_id] + [repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def load_demonstrations(path, resample_to: int | None = None) -> DemonstrationSet:
    """Read a demonstration CSV; optionally resample each demonstration to a
    common length by linear interpolation over the sample index."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        in_cols = [i for i, name in enumerate(header) if name.startswith("in_")]
        out_cols = [i for i, name in enumerate(header) if name.startswith("out_")]
        if header[:1] != ["demo"] or not in_cols or not out_cols:
            raise ParseError(
                f"{path}: header must be demo,in_*,out_*, got {header}"
            )
        demos: dict[int, list] = {}
        order: list[int] = []
        for row_idx, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {row_idx} has {len(row)} fields, expected {len(header)}")
            try:
                demo_id = int(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}: row {row_idx}: {exc}") from None
            for col, v in zip(header[1:], values):
                if not np.isfinite(v):
                    raise NonFiniteInputError(
                        f"{path}: non-finite value at row {row_idx}, column {col}"
                    )
            if demo_id not in demos:
                if order and demo_id in order[:-1]:
                    raise RaggedDemoError(
                        f"{path}: demo id {demo_id} reappears at row {row_idx}; ids must be contiguous"
                    )
                demos[demo_id] = []
                order.append(demo_id)
            demos[demo_id].append(values)
    if not demos:
        raise ParseError(f"{path}: no data rows")
    n_in = len(in_cols)
    pairs = []
    for demo_id in order:
        arr = np.asarray(demos[demo_id], float)
        if resample_to is not None and arr.shape[0] != resample_to:
            s_old = np.linspace(0.0, 1.0, arr.shape[0])
            s_new = np.linspace(0.0, 1.0, resample_to)
            arr = np.column_stack(
                [np.interp(s_new, s_old, arr[:, j]) for j in range(arr.shape[1])]
            )
        pairs.append((arr[:, :n_in], arr[:, n_in:]))
    lengths = {p[0].shape[0] for p in pairs}
    if resample_to is None and len(lengths) > 1:
        raise RaggedDemoError(
            f"{path}: demonstrations have unequal lengths {sorted(lengths)}; "
            "pass resample_to to align them"
        )
    return DemonstrationSet.from_demos(pairs)


# control polygon of a letter-B shaped planar path, traversed over t in [0, 2]
_LETTER_B_POINTS = np.array(
    [
        [0.0, -8.0],
        [0.0, -4.0],
        [0.0, 0.0],
        [0.0, 4.0],
        [0.0, 8.0],
        [3.0, 8.0],
        [5.0, 6.0],
        [5.0, 3.0],
        [1.5, 0.5],
        [5.0, -1.0],
        [6.0, -4.0],
        [4.0, -7.0],
        [0.0, -8.0],
    ]
)


def _letter_spline() -> CubicSpline:
    knots = np.linspace(0.0, 2.0, _LETTER_B_POINTS.shape[0])
    return CubicSpline(knots, _LETTER_B_POINTS, axis=0)


def _letter_demos(params: dict, rng: np.random.Generator) -> DemonstrationSet:
    n_demos = int(params.get("n_demos", 5))
    n_samples = int(params.get("samples_per_demo", 200))
    noise = float(params.get("noise", 0.05))
    warp = float(params.get("warp", 0.3))
    spline = _letter_spline()
    t = np.linspace(0.0, 2.0, n_samples)
    # variability grows along the stroke: small on the vertical line (early t),
    # larger in the right-hand curves
    envelope = 0.15 + 0.85 * t / 2.0
    demos = []
    for _ in range(n_demos):
        amp = warp * rng.standard_normal((3, 2))
        smooth = sum(
            amp[k][None, :] * np.sin((k + 1) * np.pi * t / 2.0 + rng.uniform(0, 2 * np.pi))[:, None]
            for k in range(3)
        )
        y = spline(t) + envelope[:, None] * smooth + noise * rng.standard_normal((n_samples, 2))
        demos.append((t[:, None], y))
    return DemonstrationSet.from_demos(demos)


def _minjerk_profile(s: np.ndarray) -> np.ndarray:
    return 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5


def _minjerk_demos(params: dict, rng: np.random.Generator) -> DemonstrationSet:
    start = np.asarray(params.get("start", [0.0, 0.0]), float)
    goal = np.asarray(params.get("goal", [1.0, 1.0]), float)
    duration = float(params.get("duration", 1.0))
    n_demos = int(params.get("n_demos", 5))
    n_samples = int(params.get("samples_per_demo", 100))
    noise = float(params.get("noise", 0.01))
    t = np.linspace(0.0, duration, n_samples)
    base = start + _minjerk_profile(t / duration)[:, None] * (goal - start)
    demos = []
    for _ in range(n_demos):
        y = base + noise * rng.standard_normal(base.shape)
        demos.append((t[:, None], y))
    return DemonstrationSet.from_demos(demos)


def _gmm_draw_demos(params: dict, rng: np.random.Generator) -> DemonstrationSet:
    model = params["model"]
    if isinstance(model, dict):
        model = GmmModel.from_dict(model)
    if model.input_dim != 1:
        raise ValueError("gmm-draw generation needs a time-driven (1D input) model")
    n_demos = int(params.get("n_demos", 5))
    n_samples = int(params.get("samples_per_demo", 100))
    lo = min(c.mean[0] - 2 * np.sqrt(c.covariance[0, 0]) for c in model.components)
    hi = max(c.mean[0] + 2 * np.sqrt(c.covariance[0, 0]) for c in model.components)
    t = np.linspace(lo, hi, n_samples)
    demos = []
    for _ in range(n_demos):
        y = np.empty((n_samples, model.output_dim))
        for i, ti in enumerate(t):
            pred = gmr_predict(model, [ti])
            vals, vecs = np.linalg.eigh(pred.covariance)
            root = vecs * np.sqrt(np.clip(vals, 0.0, None))
            y[i] = pred.mean + root @ rng.standard_normal(model.output_dim)
        demos.append((t[:, None], y))
    return DemonstrationSet.from_demos(demos)


def _approach_insert_demos(params: dict, rng: np.random.Generator) -> DemonstrationSet:
    """Planar approach-then-insert demonstrations: a horizontal transport phase
    followed by a straight vertical descent onto the goal. Variability is high
    during transport and small during the descent."""
    start = np.asarray(params.get("start", [0.0, 8.0]), float)
    corner = np.asarray(params.get("corner", [8.0, 8.0]), float)
    hole = np.asarray(params.get("hole", [8.0, 4.0]), float)
    t_corner = float(params.get("t_corner", 2.0))
    t_end = float(params.get("t_end", 3.0))
    n_demos = int(params.get("n_demos", 5))
    n_samples = int(params.get("samples_per_demo", 150))
    noise = float(params.get("noise", 0.03))
    spread = float(params.get("spread", 0.5))
    t = np.linspace(0.0, t_end, n_samples)
    phase1 = t <= t_corner
    base = np.empty((n_samples, start.size))
    s1 = _minjerk_profile(t[phase1] / t_corner)
    base[phase1] = start + s1[:, None] * (corner - start)
    s2 = _minjerk_profile((t[~phase1] - t_corner) / (t_end - t_corner))
    base[~phase1] = corner + s2[:, None] * (hole - corner)
    # envelope: wide during transport, pinched to ~0 through the descent
    envelope = np.where(phase1, np.sin(np.pi * t / t_corner) ** 2, 0.0)
    demos = []
    for _ in range(n_demos):
        amp = spread * rng.standard_normal((2, start.size))
        smooth = sum(
            amp[k][None, :] * np.sin((k + 1) * np.pi * t / t_end + rng.uniform(0, np.pi))[:, None]
            for k in range(2)
        )
        y = base + envelope[:, None] * smooth + noise * rng.standard_normal(base.shape)
        demos.append((t[:, None], y))
    return DemonstrationSet.from_demos(demos)


_GENERATORS = {
    "letter": _letter_demos,
    "minjerk": _minjerk_demos,
    "gmm-draw": _gmm_draw_demos,
    "approach-insert": _approach_insert_demos,
}


def generate_synthetic(kind: str, params: dict | None = None, seed: int = 0) -> DemonstrationSet:
    """Deterministically generate synthetic demonstrations of the given kind."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown kind {kind!r}; choose from {sorted(_GENERATORS)}")
    return _GENERATORS[kind](params or {}, np.random.default_rng(seed))


def two_component_toy_gmm() -> GmmModel:
    """A 1D-input/1D-output two-component mixture: one component on the left of
    the time axis, one on the right, with opposite input-output correlation.
    Handy for studying responsibilities, kernel non-stationarity and via-point
    behavior in isolation."""
    left = GaussianComponent(
        weight=0.5,
        mean=np.array([0.5, 0.0]),
        covariance=np.array([[0.09, 0.03], [0.03, 0.05]]),
    )
    right = GaussianComponent(
        weight=0.5,
        mean=np.array([1.9, 1.0]),
        covariance=np.array([[0.09, -0.04], [-0.04, 0.09]]),
    )
    return GmmModel((left, right), input_dim=1, output_dim=1)
