"""Line-oriented key=value run reports."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

from conformal_cantor import __version__

log = logging.getLogger("conformal_cantor")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value + 0.0:.17g}"  # + 0.0 drops the sign of -0.0
    if isinstance(value, complex):
        return f"{value.real + 0.0:.17g},{value.imag + 0.0:.17g}"
    if isinstance(value, (list, tuple)):
        return ",".join(fmt(v) for v in value)
    if value is None:
        return "none"
    text = str(value)
    return text.replace("\n", " ")


@dataclass
class RunReport:
    command: str
    inputs: dict
    records: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add(self, key: str, value) -> None:
        if "=" in key or " " in key:
            raise ValueError(f"bad report key {key!r}")
        self.records.append((key, value))

    def digest(self) -> str:
        blob = "\n".join(f"{k}={fmt(v)}" for k, v in sorted(self.inputs.items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def render(self) -> str:
        lines = [f"# conformal-cantor {__version__} command={self.command} digest={self.digest()}"]
        lines += [f"input.{k}={fmt(v)}" for k, v in sorted(self.inputs.items())]
        lines += [f"{k}={fmt(v)}" for k, v in self.records]
        return "\n".join(lines) + "\n"

    def log_timings(self) -> None:
        for k, v in self.timings.items():
            log.info("timing %s %.3fs", k, v)


def parse_report(text: str) -> dict:
    """Inverse of render for the key=value part (later keys win)."""
    out = {}
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k] = v
    return out
