"""Seeded synthetic series.

Randomness comes from numpy's Philox 4x64 counter-based generator, so a
given seed yields the same series on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, TimeSeries

FAMILIES = ("ar1", "sinusoid", "random_walk", "square_wave", "line")


@dataclass(frozen=True)
class SyntheticSpec:
    family: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def generate(spec: SyntheticSpec) -> TimeSeries:
    p = dict(spec.params)
    n = int(spec.n)
    if n < 2:
        raise ConfigError("n must be >= 2")
    t = np.arange(n, dtype=np.float64)
    g = rng(spec.seed)
    fam = spec.family
    if fam == "ar1":
        phi = float(p.get("phi", 0.8))
        sigma = float(p.get("sigma", 1.0))
        if abs(phi) >= 1.0:
            raise ConfigError("ar1 needs |phi| < 1")
        e = g.standard_normal(n) * sigma
        x = np.empty(n)
        x[0] = e[0] / np.sqrt(1.0 - phi * phi)
        for i in range(1, n):
            x[i] = phi * x[i - 1] + e[i]
    elif fam == "sinusoid":
        period = float(p.get("period", 24))
        if period < 2:
            raise ConfigError("period must be >= 2")
        amp = float(p.get("amplitude", 1.0))
        noise = float(p.get("noise", 0.0))
        x = amp * np.sin(2.0 * np.pi * t / period)
        if noise > 0:
            x = x + noise * g.standard_normal(n)
    elif fam == "random_walk":
        sigma = float(p.get("sigma", 1.0))
        x = np.cumsum(g.standard_normal(n) * sigma)
    elif fam == "square_wave":
        period = int(p.get("period", 16))
        if period < 2:
            raise ConfigError("period must be >= 2")
        amp = float(p.get("amplitude", 1.0))
        x = np.where((np.arange(n) % period) < period / 2, amp, -amp).astype(np.float64)
    elif fam == "line":
        x = float(p.get("slope", 1.0)) * t + float(p.get("intercept", 0.0))
    else:
        raise ConfigError(f"unknown family {fam!r}; expected one of {FAMILIES}")
    return TimeSeries(x)
