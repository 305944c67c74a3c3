"""Figure spec: what to read, how to plot it, where to write it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

PLOT_KINDS = ("tail_decay", "sweep_k", "sweep_h", "utilization_curve")
SCALES = ("linear", "log", "log2")

REQUIRED_COLUMNS = {
    "tail_decay": ["epsilon", "tau_bound"],
    "sweep_k": ["k", "tau_bound"],
    "sweep_h": ["h", "tau_bound"],
    "utilization_curve": ["lambda", "tau_bound"],
}

X_COLUMN = {
    "tail_decay": "tau_bound",
    "sweep_k": "k",
    "sweep_h": "h",
    "utilization_curve": "lambda",
}


class FigureSpecError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    output: str
    group_by: tuple = ("system",)
    x_scale: str = "linear"
    y_scale: str = "linear"
    title: str = ""

    def __post_init__(self):
        if not self.inputs:
            raise FigureSpecError("at least one input CSV is required")
        if self.kind not in PLOT_KINDS:
            raise FigureSpecError(f"plot kind must be one of {PLOT_KINDS}, got {self.kind!r}")
        if self.x_scale not in SCALES or self.y_scale not in SCALES:
            raise FigureSpecError(f"axis scales must be one of {SCALES}")
        if not self.output:
            raise FigureSpecError("output path is required")


def load_spec(path: str) -> FigureSpec:
    spec_path = Path(path)
    try:
        doc = json.loads(spec_path.read_text())
    except OSError as exc:
        raise FigureSpecError(f"{path}: cannot read spec: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FigureSpecError(f"{path}: invalid JSON: {exc}") from exc

    def resolve(p: str) -> str:
        q = Path(p)
        return str(q if q.is_absolute() else spec_path.parent / q)

    try:
        return FigureSpec(
            inputs=tuple(resolve(p) for p in doc["inputs"]),
            kind=doc["kind"],
            output=resolve(doc["output"]),
            group_by=tuple(doc.get("group_by", ("system",))),
            x_scale=doc.get("x_scale", "linear"),
            y_scale=doc.get("y_scale", "linear"),
            title=doc.get("title", ""),
        )
    except KeyError as exc:
        raise FigureSpecError(f"{path}: missing field {exc}") from exc
