"""Deterministic figure rendering from scenario CSVs."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .spec import REQUIRED_COLUMNS, X_COLUMN, FigureSpec  # noqa: E402

_STYLE = Path(__file__).parent / "figurekit.mplstyle"


class RenderError(ValueError):
    pass


class MissingColumnError(RenderError):
    def __init__(self, column: str, path: str):
        super().__init__(f"{path}: required column {column!r} is missing")
        self.column = column


class EmptyPlotError(RenderError):
    pass


def _load_frame(spec: FigureSpec) -> pd.DataFrame:
    frames = []
    needed = REQUIRED_COLUMNS[spec.kind] + list(spec.group_by)
    for path in spec.inputs:
        try:
            frame = pd.read_csv(path)
        except OSError as exc:
            raise RenderError(f"{path}: cannot read CSV: {exc}") from exc
        except pd.errors.EmptyDataError as exc:
            raise EmptyPlotError(f"{path}: empty CSV") from exc
        for column in needed:
            if column not in frame.columns:
                raise MissingColumnError(column, path)
        frames.append(frame)
    data = pd.concat(frames, ignore_index=True)
    if data.empty:
        raise EmptyPlotError(f"no data rows in {', '.join(spec.inputs)}")
    return data


def _series_label(keys, values) -> str:
    return ", ".join(f"{k}={v}" for k, v in zip(keys, values))


def _apply_scale(axis_setter, scale: str) -> None:
    if scale == "log":
        axis_setter("log")
    elif scale == "log2":
        axis_setter("log", base=2)


def build_figure(spec: FigureSpec):
    """Assemble the matplotlib figure for a spec; returns (fig, ax)."""
    data = _load_frame(spec)
    finite = data[data["tau_bound"] != math.inf] if "tau_bound" in data else data
    skipped = len(data) - len(finite)
    if finite.empty:
        raise EmptyPlotError("all rows are unstable (tau_bound = inf)")

    plt.style.use(str(_STYLE))
    plt.rcParams["svg.hashsalt"] = "figurekit"
    fig, ax = plt.subplots()
    groups = sorted(finite.groupby(list(spec.group_by)), key=lambda kv: str(kv[0]))
    for key, rows in groups:
        key = key if isinstance(key, tuple) else (key,)
        label = _series_label(spec.group_by, key)
        exact = "alpha_mode" in rows and (rows["alpha_mode"] == "exact").all()
        style = {"linestyle": "--"} if exact else {}
        if spec.kind == "tail_decay":
            rows = rows.sort_values("epsilon", ascending=False)
            ax.plot(rows["tau_bound"], rows["epsilon"], label=label, **style)
            sim = rows.dropna(subset=["tau_sim"]) if "tau_sim" in rows else rows.iloc[0:0]
            if not sim.empty:
                ax.errorbar(sim["tau_sim"], sim["epsilon"],
                            xerr=[sim["tau_sim"] - sim["ci_lo"], sim["ci_hi"] - sim["tau_sim"]],
                            fmt="o", markersize=3, capsize=2, label=f"{label} (sim)")
            ax.set_xlabel("tau")
            ax.set_ylabel("epsilon")
        else:
            x_col = X_COLUMN[spec.kind]
            rows = rows.sort_values(x_col)
            ax.plot(rows[x_col], rows["tau_bound"], marker=".", label=label, **style)
            sim = rows.dropna(subset=["tau_sim"]) if "tau_sim" in rows else rows.iloc[0:0]
            if not sim.empty:
                ax.errorbar(sim[x_col], sim["tau_sim"],
                            yerr=[sim["tau_sim"] - sim["ci_lo"], sim["ci_hi"] - sim["tau_sim"]],
                            fmt="o", markersize=3, capsize=2, label=f"{label} (sim)")
            ax.set_xlabel(x_col)
            ax.set_ylabel("tau")

    _apply_scale(ax.set_xscale, spec.x_scale)
    _apply_scale(ax.set_yscale, spec.y_scale)
    if spec.title:
        ax.set_title(spec.title)
    handles, labels = ax.get_legend_handles_labels()
    if skipped:
        labels[-1] += f"  [{skipped} unstable rows omitted]"
    ax.legend(handles, labels, fontsize=7)
    return fig, ax


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path.

    Same spec + same CSV bytes produce an identical SVG payload: fixed style,
    fixed hash salt, no timestamps, series sorted by grouping key.
    """
    fig, _ax = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(out)
