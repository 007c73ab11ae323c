"""Render the report tables to PNG figures.

Consumes the already-built ReportBundle tables, never the raw corpus, so a
figure can always be reproduced from the emitted CSVs. The Agg backend is
forced and PNG metadata is pinned to keep the bytes identical across reruns.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .report import ACTIVITY_METRICS, ReportBundle  # noqa: E402

_SAVEFIG_KWARGS = {"dpi": 150, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)
    return path


def render_lma_distribution(bundle: ReportBundle, out_dir: Path) -> Path | None:
    table = bundle.tables.get("lma_distribution")
    if table is None:
        return None
    values = [float(row[2]) for row in table.rows if row[2] != ""]
    fig, ax = plt.subplots(figsize=(5, 4))
    if values:
        ax.hist(values, bins=20, range=(0, 100), color="tab:green", edgecolor="black")
    ax.set_xlabel("level of maintenance activity")
    ax.set_ylabel("projects")
    ax.set_title("Maintenance activity of projects predicted active")
    fig.tight_layout()
    return _save(fig, out_dir / "lma_distribution.png")


def render_days_since_last_commit(bundle: ReportBundle, out_dir: Path) -> Path | None:
    table = bundle.tables.get("days_since_last_commit")
    if table is None:
        return None
    values = [float(row[1]) for row in table.rows]
    fig, ax = plt.subplots(figsize=(4, 4))
    if values:
        if len(set(values)) > 1:
            ax.violinplot([values], showmedians=True)
        else:
            ax.boxplot([values])
        ax.set_xticks([1])
        ax.set_xticklabels(["projects"])
    ax.set_ylabel("days since last commit")
    fig.tight_layout()
    return _save(fig, out_dir / "days_since_last_commit.png")


def render_activity_series(bundle: ReportBundle, out_dir: Path) -> Path | None:
    table = bundle.tables.get("activity_series")
    if table is None:
        return None
    window_labels = table.header[3:]
    x = range(1, len(window_labels) + 1)
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    for ax, (metric_name, _) in zip(axes.flat, ACTIVITY_METRICS):
        for row in table.rows:
            if row[2] != metric_name:
                continue
            counts = [float(v) for v in row[3:]]
            if row[1] == "high":
                ax.plot(x, counts, color="tab:green", alpha=0.7)
            else:
                ax.plot(x, counts, color="tab:red", linestyle="--", alpha=0.7)
        ax.set_title(metric_name.replace("_", " "))
        ax.set_xticks(list(x))
        ax.set_xticklabels(window_labels, rotation=45, fontsize=7)
    fig.suptitle("Activity over time: highest-scored (green) vs lowest-scored (red)")
    fig.tight_layout()
    return _save(fig, out_dir / "activity_series.png")


def render_lma_correlations(bundle: ReportBundle, out_dir: Path) -> Path | None:
    scatter = bundle.tables.get("lma_scatter")
    corr = bundle.tables.get("lma_correlations")
    if scatter is None or corr is None:
        return None
    rho_by_var = {row[0]: row[2] for row in corr.rows}
    cols = {name: idx for idx, name in enumerate(scatter.header)}
    lma_values = [float(row[cols["lma"]]) for row in scatter.rows]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    for ax, var in zip(axes.flat, ("stars", "contributors", "core_contributors", "size_loc")):
        xs = [float(row[cols[var]]) for row in scatter.rows]
        ax.scatter(xs, lma_values, s=12, color="tab:blue", alpha=0.6)
        rho = rho_by_var.get(var, "")
        label = f"rho = {float(rho):.2f}" if rho else "rho degenerate"
        ax.set_title(f"{var.replace('_', ' ')} ({label})")
        ax.set_ylabel("LMA")
        if xs and min(xs) > 0 and max(xs) / max(min(xs), 1e-9) > 100:
            ax.set_xscale("log")
    fig.tight_layout()
    return _save(fig, out_dir / "lma_correlations.png")


def render_all(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        render_lma_distribution(bundle, out_dir),
        render_days_since_last_commit(bundle, out_dir),
        render_activity_series(bundle, out_dir),
        render_lma_correlations(bundle, out_dir),
    ]
    return [p for p in paths if p is not None]
