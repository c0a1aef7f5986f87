"""Optional figure rendering for run reports.

The canonical outputs are the CSV/JSON files; these helpers render quick
matplotlib views of them next to the data when the CLI is invoked with
--plot.  Import stays local so headless environments without a display
work (Agg backend).
"""

from __future__ import annotations

import os


def render_report(report, out_dir: str) -> str | None:
    """Render a PNG for the pipelines with a natural plot; returns the path
    (or None when the pipeline has no figure)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = {name: i for i, name in enumerate(report.columns)}
    path = os.path.join(out_dir, report.pipeline + ".png")
    fig, ax = plt.subplots(figsize=(6, 4))

    if report.pipeline == "short-time":
        by_p = {}
        for rec in report.records:
            by_p.setdefault(rec[cols["p"]], []).append(
                (rec[cols["tau"]], rec[cols["S_d"]]))
        for p, pts in sorted(by_p.items()):
            pts.sort()
            ax.plot([x for x, _ in pts], [y for _, y in pts],
                    marker="o", ms=3, label=f"p={p}")
        ax.set_xlabel("tau")
        ax.set_ylabel("S_d")
        ax.legend()
    elif report.pipeline in ("resonance", "gaussian"):
        by_m = {}
        for rec in report.records:
            by_m.setdefault(rec[cols["m"]], []).append(
                (rec[cols["tau"]], rec[cols["S_d"]], rec[cols["S_R2"]]))
        for m, pts in sorted(by_m.items()):
            pts.sort()
            ax.plot([x for x, _, _ in pts], [y for _, y, _ in pts],
                    label=f"S_d m={m}")
            ax.plot([x for x, _, _ in pts], [z for _, _, z in pts],
                    linestyle="--", label=f"S_R m={m}")
        ax.set_xlabel("tau")
        ax.set_ylabel("entropy (nats)")
        ax.legend()
    elif report.pipeline in ("fock-oracle", "field-oracle", "crosscheck"):
        xs = [rec[cols["tau"]] for rec in report.records]
        for name in report.columns[1:]:
            if name.startswith("N"):
                ax.plot(xs, [rec[cols[name]] for rec in report.records],
                        marker="o", ms=3, label=name)
        ax.set_xlabel("tau")
        ax.set_ylabel("particle number")
        ax.legend()
    else:
        plt.close(fig)
        return None

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
