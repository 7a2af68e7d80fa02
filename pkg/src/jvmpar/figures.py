"""Report figures: execution time, speedup, and efficiency charts rendered
next to the delimited output (the metrics module itself stays plot-free)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_figures(rows: list[dict], outdir: str | Path, stem: str = "bench") -> list[str]:
    """One time plot (log-log), one speedup plot, one efficiency plot.

    `rows` is the metrics JSON payload: benchmark, N, P, T, E, S per entry.
    Returns the written file paths.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    series: dict[tuple[str, int], list[dict]] = {}
    for r in rows:
        series.setdefault((r["benchmark"], r["N"]), []).append(r)
    for group in series.values():
        group.sort(key=lambda r: r["P"])

    written = []

    def one(metric: str, ylabel: str, fname: str, logy: bool):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for (label, n), group in sorted(series.items()):
            ps = [g["P"] for g in group]
            ys = [g[metric] for g in group]
            ax.plot(ps, ys, marker="o", label=f"{label} N={n}")
        ax.set_xlabel("workers P")
        ax.set_ylabel(ylabel)
        if logy:
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / f"{stem}-{fname}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))

    one("T", "time / cost", "time", logy=True)
    one("S", "speedup S", "speedup", logy=False)
    one("E", "efficiency E", "efficiency", logy=False)
    return written
