"""Machine-readable reports and their companion figures.

Reports are canonical nested key-value text with stable key order. When a
report path is given on the CLI, figures render next to it: training curves
(per trained unit, from the epoch log) for builds, and an event timeline for
simulation runs. Rendering uses matplotlib's Agg backend and never needs a
display.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

from .diagnostics import Diagnostic
from .frontend.printer import print_config_tree
from .model import ConfigTree
from .simulator.trace import Trace

_LOG_LINE = re.compile(r"^epoch=(\d+)\s+loss=([-\d.eE+]+)\s+acc=([-\d.eE+]+)\s*$")


@dataclass(frozen=True)
class EpochPoint:
    epoch: int
    loss: float
    acc: float


def parse_training_log(text: str) -> list[EpochPoint]:
    points = []
    for line in text.splitlines():
        match = _LOG_LINE.match(line.strip())
        if match:
            points.append(EpochPoint(int(match.group(1)), float(match.group(2)), float(match.group(3))))
    return points


def write_report(tree: ConfigTree, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(print_config_tree(tree) + "\n")


def diagnostics_report(command: str, project: str, diags: list[Diagnostic], ok: bool) -> ConfigTree:
    entries = []
    for i, d in enumerate(diags, start=1):
        entries.append(
            (
                f"d{i}",
                ConfigTree(
                    (
                        ("severity", str(d.severity)),
                        ("code", d.code),
                        ("file", d.pos.file),
                        ("line", d.pos.line),
                        ("column", d.pos.column),
                        ("message", d.message),
                    )
                ),
            )
        )
    return ConfigTree(
        (
            ("kind", command),
            ("project", project),
            ("ok", ok),
            ("diagnostics", ConfigTree(tuple(entries))),
        )
    )


def _figure_path(report_path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(report_path)
    return f"{stem}.{suffix}.png"


def render_training_figures(report, project_root: str, report_path: str) -> list[str]:
    """One loss/accuracy curve per unit that actually trained; returns paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[str] = []
    for result in report.trained:
        log_path = os.path.join(project_root, result.log)
        if not os.path.isfile(log_path):
            continue
        with open(log_path, "r", encoding="utf-8") as fh:
            points = parse_training_log(fh.read())
        if not points:
            continue
        epochs = [p.epoch for p in points]
        fig, ax_loss = plt.subplots(figsize=(6.0, 3.6))
        ax_loss.plot(epochs, [p.loss for p in points], color="tab:red", label="loss")
        ax_loss.set_xlabel("epoch")
        ax_loss.set_ylabel("loss", color="tab:red")
        ax_acc = ax_loss.twinx()
        ax_acc.plot(epochs, [p.acc for p in points], color="tab:blue", label="accuracy")
        ax_acc.set_ylabel("accuracy", color="tab:blue")
        ax_acc.set_ylim(0.0, 1.05)
        ax_loss.set_title(f"{result.unit} ({result.decision}, final={result.metric})")
        fig.tight_layout()
        path = _figure_path(report_path, f"{result.unit}.training")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written


def render_trace_timeline(trace: Trace, report_path: str) -> str | None:
    """Virtual-time timeline of trace events, one lane per thing."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not len(trace):
        return None
    things = sorted({e.thing for e in trace})
    lanes = {name: i for i, name in enumerate(things)}
    styles = {
        "state_entered": ("o", "tab:blue"),
        "message_sent": (">", "tab:green"),
        "message_received": ("<", "tab:olive"),
        "action": (".", "tab:gray"),
        "prediction": ("*", "tab:red"),
    }
    fig, ax = plt.subplots(figsize=(7.5, 0.7 * max(3, len(things))))
    for kind, (marker, color) in styles.items():
        xs = [e.time for e in trace if e.kind == kind]
        ys = [lanes[e.thing] for e in trace if e.kind == kind]
        if xs:
            ax.scatter(xs, ys, marker=marker, color=color, label=kind, s=48, alpha=0.85)
    ax.set_yticks(range(len(things)))
    ax.set_yticklabels(things)
    ax.set_xlabel("virtual time")
    ax.set_title("simulation timeline")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    path = _figure_path(report_path, "timeline")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
