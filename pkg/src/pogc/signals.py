"""Input signal definitions and their textual spec (``const:``, ``step:``, ``sin:``, ``csv:``)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Const:
    value: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def spec(self) -> str:
        return f"const:{self.value!r}"


@dataclass(frozen=True)
class Step:
    """Zero before ``t0``, ``value`` from ``t0`` on."""

    value: float
    t0: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= self.t0, self.value, 0.0)

    def spec(self) -> str:
        return f"step:{self.value!r}@{self.t0!r}"


@dataclass(frozen=True)
class Sine:
    """``amp * sin(2*pi*freq*t + phase)``; freq in Hz, phase in rad."""

    amp: float
    freq: float
    phase: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amp * np.sin(2.0 * math.pi * self.freq * t + self.phase)

    def spec(self) -> str:
        return f"sin:{self.amp!r},{self.freq!r},{self.phase!r}"


@dataclass(frozen=True)
class Samples:
    """Piecewise-linear interpolation through (times, values); held constant outside."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    path: str = ""

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("sample signal needs matching, non-empty time and value lists")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("sample times must be strictly increasing")

    @classmethod
    def from_csv(cls, path: str | Path) -> "Samples":
        times, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    t, v = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                times.append(t)
                values.append(v)
        return cls(tuple(times), tuple(values), str(path))

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)

    def spec(self) -> str:
        return f"csv:{self.path}"


InputSignal = Const | Step | Sine | Samples


def parse_signal(text: str, base_dir: str | Path | None = None) -> InputSignal:
    """Parse one signal spec. Raises ValueError with a short reason."""
    head, sep, body = text.partition(":")
    if not sep:
        raise ValueError("signal must look like kind:args")
    if head == "const":
        return Const(float(body))
    if head == "step":
        value, at, t0 = body.partition("@")
        if not at:
            raise ValueError("step signal must be step:<v>@<t>")
        return Step(float(value), float(t0))
    if head == "sin":
        parts = body.split(",")
        if len(parts) != 3:
            raise ValueError("sin signal must be sin:<amp>,<freq>,<phase>")
        return Sine(*(float(p) for p in parts))
    if head == "csv":
        path = Path(body)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return Samples.from_csv(path)
    raise ValueError(f"unknown signal kind {head!r}")
