"""Fixed-width summary tables and figure rendering for reports.

Figures use the Agg backend and go straight to files; nothing here opens
a window. Table renderers return strings so the CLI can both print them
and write them next to the machine-readable output.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import ScalarFormatter  # noqa: E402


def render_table(headers, rows):
    """Plain fixed-width table; every cell is str()'d, columns padded."""
    body = [[str(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[j]) for r in body)) if body else len(h)
              for j, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)),
             "  ".join("-" * w for w in widths)]
    for r in body:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def grid_summary_table(report):
    headers = ["variant", "size", "cells", "mean F1", "std", "min", "max"]
    rows = [[s["variant"], s["size"], s["cells"], f"{s['mean_f1']:.2f}",
             f"{s['std_f1']:.2f}", f"{s['min_f1']:.2f}", f"{s['max_f1']:.2f}"]
            for s in report.summary]
    table = render_table(headers, rows)
    if report.partial:
        failed = sum(1 for c in report.cells if c["error"])
        table += f"\n(partial: {failed} of {len(report.cells)} cells failed)"
    return table


def bench_table(reports):
    headers = ["model", "batch", "seconds", "sent/s", "tok/s"]
    rows = []
    for rep in reports:
        for row in rep.rows:
            rows.append([rep.model, row["batch_size"], f"{row['seconds']:.3f}",
                         f"{row['sentences_per_second']:.1f}",
                         f"{row['tokens_per_second']:.1f}"])
    return render_table(headers, rows)


def plot_grid(report, path):
    """Mean test F1 against labeled-set size, one line per variant, std
    shown as error bars."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    variants = sorted({s["variant"] for s in report.summary})
    for variant in variants:
        cells = [s for s in report.summary if s["variant"] == variant]
        cells.sort(key=lambda s: s["size"])
        sizes = [s["size"] for s in cells]
        means = [s["mean_f1"] for s in cells]
        stds = [s["std_f1"] for s in cells]
        ax.errorbar(sizes, means, yerr=stds, marker="o", capsize=3, label=variant)
    ax.set_xscale("log")
    ax.set_xticks(sorted({s["size"] for s in report.summary}))
    ax.get_xaxis().set_major_formatter(ScalarFormatter())
    ax.set_xlabel("labeled training sentences")
    ax.set_ylabel("test F1")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_bench(reports, path):
    """Sentences/second against batch size, one line per model."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rep in reports:
        sizes = [r["batch_size"] for r in rep.rows]
        rates = [r["sentences_per_second"] for r in rep.rows]
        ax.plot(sizes, rates, marker="o", label=rep.model)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("batch size")
    ax.set_ylabel("sentences / second")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_training(history, path):
    """Loss and dev F1 curves over epochs on twin axes."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    epochs = [h["epoch"] for h in history]
    ax.plot(epochs, [h["loss"] for h in history], marker="o", color="tab:blue",
            label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss", color="tab:blue")
    dev = [(h["epoch"], h["dev_f1"]) for h in history if h["dev_f1"] is not None]
    if dev:
        ax2 = ax.twinx()
        ax2.plot([e for e, _ in dev], [f for _, f in dev], marker="s",
                 color="tab:orange", label="dev F1")
        ax2.set_ylabel("dev F1", color="tab:orange")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
