"""Check reports and their text/JSON renderings."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction

STATUSES = ("pass", "fail", "divergent-certified", "unsupported")


@dataclass
class Report:
    check: str
    params: dict
    status: str
    witness: dict | None = None
    ms: float = 0.0
    # prop4 is the only check where a certified divergence is the expected outcome
    divergence_expected: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status in ("fail", "unsupported") and not self.witness:
            raise ValueError(f"{self.status} report for {self.check!r} needs a witness")

    @property
    def ok(self) -> bool:
        if self.status == "pass":
            return True
        return self.status == "divergent-certified" and self.divergence_expected

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "check": self.check,
            "params": _plain(self.params),
            "status": self.status,
            "witness": None if self.witness is None else _plain(self.witness),
            "ms": round(self.ms, 3) if timing else 0,
        }

    def to_text(self, timing: bool = True) -> str:
        head = f"{self.status.upper():<20} {self.check}"
        params = " ".join(f"{k}={_fmt_param(v)}" for k, v in sorted(self.params.items()))
        line = f"{head}  [{params}]" if params else head
        if timing:
            line += f"  ({self.ms:.0f} ms)"
        if self.witness and not self.status == "pass":
            line += "\n    witness: " + json.dumps(_plain(self.witness), sort_keys=True)
        return line


def _fmt_param(v) -> str:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return f"{v[0]}..{v[1]}"
    return str(v)


def _plain(x):
    """Coerce to JSON-safe values; anything exotic becomes its string form."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return str(x)


def dumps(reports: list, timing: bool = True) -> str:
    """Byte-stable JSON: fixed key order, sorted object keys, trailing newline."""
    return json.dumps([r.to_dict(timing) for r in reports], sort_keys=True, indent=2) + "\n"


class Writer:
    """Serializes report output from worker threads."""

    def __init__(self, stream, timing: bool = True):
        self.stream = stream
        self.timing = timing
        self.lock = threading.Lock()

    def emit(self, report: Report) -> None:
        with self.lock:
            print(report.to_text(self.timing), file=self.stream, flush=True)
