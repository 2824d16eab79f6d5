"""Render solve traces and lemma reports to figures plus CSV files."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import InputError


def _step_detail(step: dict) -> str:
    kind = step.get("kind")
    if kind == "ideal_reduce":
        return (
            f"a={step.get('coordinate')} side={step.get('side')}"
            f" |X|={step.get('ideal_size')}"
        )
    if kind == "simple_reduce":
        return f"M={step.get('coordinates')}"
    return ""


def render_trace(trace: dict, out_dir: str) -> list[str]:
    """Potential curve and a step table for one solve trace."""
    steps = trace.get("steps")
    if not isinstance(steps, list):
        raise InputError("trace JSON must contain a 'steps' list")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trace.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "kind", "detail", "potential"])
        for i, step in enumerate(steps):
            writer.writerow([i, step.get("kind"), _step_detail(step), step.get("potential")])

    fig, ax = plt.subplots(figsize=(7, 4))
    xs = list(range(len(steps)))
    ys = [step.get("potential", 0) for step in steps]
    ax.step(xs, ys, where="post", marker="o")
    for x, step in zip(xs, steps):
        if step.get("kind") == "simple_reduce":
            ax.axvline(x, color="tab:orange", alpha=0.3, linewidth=4)
    ax.set_xlabel("reduction step")
    ax.set_ylabel("potential (sum of coordinate set sizes)")
    verdict = trace.get("verdict")
    ax.set_title(f"solve trace ({verdict})" if verdict else "solve trace")
    ax.set_xticks(xs)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    png_path = os.path.join(out_dir, "trace_potential.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def render_lemmas(reports: list, out_dir: str) -> list[str]:
    """Checked/vacuous bars and a summary table for a lemma suite run."""
    if not isinstance(reports, list) or not all(
        isinstance(r, dict) and "lemma" in r for r in reports
    ):
        raise InputError("lemma JSON must be a list of report objects")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "lemmas.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lemma", "checked", "vacuous", "counterexamples"])
        for r in reports:
            writer.writerow(
                [r["lemma"], r.get("checked", 0), r.get("vacuous", 0),
                 len(r.get("counterexamples", []))]
            )

    fig, ax = plt.subplots(figsize=(9, 4.5))
    names = [r["lemma"] for r in reports]
    xs = list(range(len(names)))
    checked = [r.get("checked", 0) for r in reports]
    vacuous = [r.get("vacuous", 0) for r in reports]
    width = 0.4
    ax.bar([x - width / 2 for x in xs], checked, width, label="checked")
    ax.bar([x + width / 2 for x in xs], vacuous, width, label="vacuous")
    bad = [i for i, r in enumerate(reports) if r.get("counterexamples")]
    for i in bad:
        ax.axvspan(i - 0.5, i + 0.5, color="red", alpha=0.15)
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("instances")
    ax.set_yscale("symlog")
    ax.set_title("structural checks" + (" (counterexamples!)" if bad else ""))
    ax.legend()
    fig.tight_layout()
    png_path = os.path.join(out_dir, "lemma_counts.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]
