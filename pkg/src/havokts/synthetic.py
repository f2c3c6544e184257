"""Deterministic test-signal generators.

Noise comes from numpy's PCG64 bit generator seeded with ``params["seed"]``,
so a fixed spec yields bit-identical output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from havokts._backend import kernels
from havokts.errors import ParameterError
from havokts.signal import Dataset, ExperimentParams, Sequence

KINDS = ("lorenz", "sine", "chirp", "noisy-sine")

LORENZ_DEFAULTS = {
    "sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0,
    "x0": -8.0, "y0": 8.0, "z0": 27.0, "transient": 10.0,
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    dt: float
    n_samples: int
    params: Mapping[str, float] = field(default_factory=dict)
    id: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}; choose from {KINDS}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ParameterError(f"n_samples must be an integer >= 2, got {self.n_samples}")


def lorenz_states(spec: GeneratorSpec) -> np.ndarray:
    """Full (n_samples, 3) Lorenz trajectory after the transient."""
    p = {**LORENZ_DEFAULTS, **spec.params}
    n_transient = int(round(p["transient"] / spec.dt))
    return kernels.lorenz_rk4(
        float(p["x0"]), float(p["y0"]), float(p["z0"]),
        float(p["sigma"]), float(p["rho"]), float(p["beta"]),
        float(spec.dt), n_transient, int(spec.n_samples),
    )


def _noise(p, n):
    sigma = float(p.get("noise", 0.0))
    if sigma == 0.0:
        return 0.0
    rng = np.random.Generator(np.random.PCG64(int(p.get("seed", 0))))
    return sigma * rng.standard_normal(n)


def generate(spec: GeneratorSpec) -> Sequence:
    p = dict(spec.params)
    n = int(spec.n_samples)
    t = np.arange(n) * spec.dt
    if spec.kind == "lorenz":
        x = lorenz_states(spec)[:, 0]
    elif spec.kind in ("sine", "noisy-sine"):
        amp = float(p.get("amplitude", 1.0))
        freq = float(p.get("frequency", 1.0))
        x = amp * np.sin(2.0 * np.pi * freq * t + float(p.get("phase", 0.0)))
        x = x + float(p.get("offset", 0.0))
        if spec.kind == "noisy-sine":
            p.setdefault("noise", 0.1)
        x = x + _noise(p, n)
    else:
        # linear chirp from f0 to f1 over the sequence duration
        amp = float(p.get("amplitude", 1.0))
        f0 = float(p.get("f0", 0.1))
        f1 = float(p.get("f1", 1.0))
        duration = max(t[-1], spec.dt)
        phase = 2.0 * np.pi * (f0 * t + 0.5 * (f1 - f0) / duration * t * t)
        x = amp * np.sin(phase + float(p.get("phase", 0.0))) + float(p.get("offset", 0.0))
        x = x + _noise(p, n)
    attrs = {"kind": spec.kind, **{k: v for k, v in spec.params.items()}}
    return Sequence(x, spec.dt, ExperimentParams(spec.id or spec.kind, attrs))


def demo_corpus(n_per_family: int = 10, seed: int = 0, dt: float = 0.01,
                n_samples: int = 2000) -> Dataset:
    """Three generator families (slow sine, fast sine, chirp).

    Members of a family differ by a +-5% amplitude jitter and their noise
    realization. Member ``i`` of family ``f`` has id ``"{f}-{i:02d}"``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    seqs = []
    # family -> (kind, base amplitude, frequency parameters)
    families = {
        "slow": ("sine", 1.0, {"frequency": 0.5}),
        "fast": ("sine", 0.5, {"frequency": 5.0}),
        "chirp": ("chirp", 2.0, {"f0": 0.3, "f1": 9.0}),
    }
    for family, (kind, base_amp, base) in families.items():
        for i in range(n_per_family):
            params = dict(base)
            params.update(
                amplitude=base_amp * float(rng.uniform(0.95, 1.05)),
                noise=0.05 * base_amp,
                seed=int(rng.integers(0, 2**31 - 1)),
            )
            spec = GeneratorSpec(kind, dt, n_samples, params, id=f"{family}-{i:02d}")
            seqs.append(generate(spec))
    return Dataset(tuple(seqs))
