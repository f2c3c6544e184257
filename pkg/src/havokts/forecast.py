"""Forward simulation of a fitted HAVOK model, reconstruction and error diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from havokts._backend import kernels
from havokts.errors import BoundsError, ParameterError
from havokts.havok import HavokModel

FORCING_MODES = ("measured", "zero", "held")
DEFAULT_FORCING_THRESHOLD = 0.045


@dataclass(frozen=True, eq=False)
class ForecastResult:
    v_traj: np.ndarray
    x_hat: np.ndarray
    forcing: np.ndarray
    forcing_mode: str
    horizon: int


def simulate(model: HavokModel, v0, forcing=None, steps: int | None = None,
             mode: str = "measured") -> ForecastResult:
    """Integrate ``v' = A v + B u`` with RK4, ``u`` held constant over each step.

    ``v0`` holds the r-1 linear coordinates at the first instant. With
    ``mode="measured"`` ``forcing`` supplies ``u`` per step (at least ``steps``
    values); ``"zero"`` uses ``u = 0`` and ``"held"`` repeats the last training
    value of the forcing coordinate. Row 0 of the trajectory is ``v0``.
    """
    if mode not in FORCING_MODES:
        raise ParameterError(f"forcing mode must be one of {FORCING_MODES}, got {mode!r}")
    v0 = np.asarray(v0, dtype=np.float64).ravel()
    if v0.size != model.r - 1:
        raise BoundsError(f"v0 needs {model.r - 1} entries, got {v0.size}")
    if steps is None:
        if mode != "measured" or forcing is None:
            raise ParameterError("steps is required unless a measured forcing series is given")
        steps = len(forcing)
    steps = int(steps)
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if mode == "measured":
        if forcing is None:
            raise ParameterError("measured mode needs a forcing series")
        u = np.asarray(forcing, dtype=np.float64).ravel()
        if u.size < steps:
            raise BoundsError(f"forcing has {u.size} samples, {steps} steps requested")
        u = np.ascontiguousarray(u[:steps])
    elif mode == "zero":
        u = np.zeros(steps)
    else:
        u = np.full(steps, model.forcing[-1])
    traj = kernels.forced_linear_rk4(
        np.ascontiguousarray(model.A), np.ascontiguousarray(model.B), v0, u, float(model.dt), steps
    )
    x_hat = reconstruct(model, traj, u)
    return ForecastResult(traj, x_hat, u, mode, steps)


def reconstruct(model: HavokModel, v_traj, forcing=None) -> np.ndarray:
    """Scalar series from delay coordinates: the first Hankel row of ``U_r S_r v^T``.

    ``v_traj`` may carry all r coordinates, or r-1 with the forcing given
    separately (zero when omitted).
    """
    v = np.asarray(v_traj, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[1] == model.r - 1:
        u = np.zeros(v.shape[0]) if forcing is None else np.asarray(forcing, dtype=np.float64).ravel()
        if u.size != v.shape[0]:
            raise BoundsError(f"forcing length {u.size} does not match trajectory length {v.shape[0]}")
        v = np.column_stack([v, u])
    elif v.shape[1] != model.r:
        raise BoundsError(f"trajectory has {v.shape[1]} columns; expected {model.r - 1} or {model.r}")
    return v @ (model.U_r[0] * model.S_r)


def forcing_active(v_r, eps_force: float = DEFAULT_FORCING_THRESHOLD,
                   merge_gap: int = 0) -> list[tuple[int, int]]:
    """Half-open index intervals ``[start, stop)`` where ``|v_r| > eps_force``.

    Intervals separated by fewer than ``merge_gap`` samples are merged.
    """
    v = np.abs(np.asarray(v_r, dtype=np.float64).ravel())
    on = np.concatenate([[False], v > eps_force, [False]])
    edges = np.flatnonzero(on[1:] != on[:-1])
    runs = [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]
    if merge_gap > 0 and runs:
        merged = [runs[0]]
        for a, b in runs[1:]:
            if a - merged[-1][1] < merge_gap:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        runs = merged
    return runs


@dataclass(frozen=True, eq=False)
class ErrorEvolution:
    """Ensemble error statistics per instant; ``time`` is in units of dt."""

    time: np.ndarray
    rmse: np.ndarray
    mae: np.ndarray
    vae: np.ndarray
    histograms: dict = field(default_factory=dict)


def error_evolution(predictions, truths, instants=(), bins: int = 20) -> ErrorEvolution:
    """RMSE, MAE and VAE (population variance of |e|) across ensemble members at each instant.

    ``predictions`` and ``truths`` are (members, steps). ``histograms`` maps
    each requested instant to ``(counts, edges)`` of the signed errors.
    """
    P = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    T = np.atleast_2d(np.asarray(truths, dtype=np.float64))
    if P.size == 0 or P.shape[0] == 0:
        raise ParameterError("error_evolution needs a nonempty ensemble")
    if P.shape != T.shape:
        raise BoundsError(f"prediction shape {P.shape} does not match truth shape {T.shape}")
    e = P - T
    ae = np.abs(e)
    hist = {}
    for t in instants:
        t = int(t)
        if not 0 <= t < e.shape[1]:
            raise BoundsError(f"histogram instant {t} outside [0, {e.shape[1]})")
        hist[t] = np.histogram(e[:, t], bins=bins)
    return ErrorEvolution(
        time=np.arange(e.shape[1]),
        rmse=np.sqrt(np.mean(e * e, axis=0)),
        mae=ae.mean(axis=0),
        vae=ae.var(axis=0),
        histograms=hist,
    )
