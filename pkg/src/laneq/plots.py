"""Tidy plot-data tables and rendered figures for training logs and reports.

One table per figure family, written as CSV with a config-hash comment line,
plus a PNG rendering of each table.  Tables are the contract (downstream
tooling can re-plot them); the PNGs are a convenience for quick inspection.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import K_VALUES  # noqa: E402

LOG_COLUMNS_REQUIRED = (
    ["epoch", "train_loss"]
    + [f"val_min_ade_k{k}" for k in K_VALUES]
    + [f"val_min_fde_k{k}" for k in K_VALUES]
    + ["val_miss_2m", "val_miss_4m", "val_hit_at_1", "best_val_min_ade_16"]
)

# strip volatile PNG metadata so re-rendering identical data gives identical bytes
_PNG_METADATA = {"Software": None}


def check_log_columns(rows: list[dict]) -> None:
    if not rows:
        raise ValueError("training log has no data rows")
    for column in LOG_COLUMNS_REQUIRED:
        if column not in rows[0]:
            raise ValueError(f"training log is missing required column {column!r}")


def _write_table(path, header: list[str], rows: list[list], config_hash: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    header, rows = None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path} has no header row")
    return header, rows


def _save_figure(fig, path):
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def export_loss_curve(rows, out_dir, config_hash, figures=True) -> list[str]:
    epochs = [r["epoch"] for r in rows]
    losses = [r["train_loss"] for r in rows]
    _write_table(
        f"{out_dir}/loss_curve.csv", ["epoch", "train_loss"], list(map(list, zip(epochs, losses))),
        config_hash,
    )
    written = ["loss_curve.csv"]
    if figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(epochs, losses, marker="o", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean train loss")
        ax.set_title("Training loss")
        fig.tight_layout()
        _save_figure(fig, f"{out_dir}/loss_curve.png")
        written.append("loss_curve.png")
    return written


def export_error_curves(rows, out_dir, config_hash, figures=True) -> list[str]:
    header = (
        ["epoch"]
        + [f"val_min_ade_k{k}" for k in K_VALUES]
        + [f"val_min_fde_k{k}" for k in K_VALUES]
        + ["best_val_min_ade_16"]
    )
    table = [[r[c] for c in header] for r in rows]
    _write_table(f"{out_dir}/ade_fde_vs_epoch.csv", header, table, config_hash)
    written = ["ade_fde_vs_epoch.csv"]
    if figures:
        fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
        epochs = [r["epoch"] for r in rows]
        for k in K_VALUES:
            axes[0].plot(epochs, [r[f"val_min_ade_k{k}"] for r in rows], label=f"K={k}")
            axes[1].plot(epochs, [r[f"val_min_fde_k{k}"] for r in rows], label=f"K={k}")
        axes[0].set_ylabel("minADE [m]")
        axes[1].set_ylabel("minFDE [m]")
        for ax in axes:
            ax.set_xlabel("epoch")
            ax.legend(fontsize=8)
        fig.tight_layout()
        _save_figure(fig, f"{out_dir}/ade_fde_vs_epoch.png")
        written.append("ade_fde_vs_epoch.png")
    return written


def export_miss_rates(rows, out_dir, config_hash, figures=True) -> list[str]:
    header = ["epoch", "val_miss_2m", "val_miss_4m", "val_hit_at_1"]
    _write_table(
        f"{out_dir}/miss_rates.csv", header, [[r[c] for c in header] for r in rows], config_hash
    )
    written = ["miss_rates.csv"]
    if figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        epochs = [r["epoch"] for r in rows]
        ax.plot(epochs, [r["val_miss_2m"] for r in rows], label="miss@2m")
        ax.plot(epochs, [r["val_miss_4m"] for r in rows], label="miss@4m")
        ax.plot(epochs, [r["val_hit_at_1"] for r in rows], label="hit@1", ls="--")
        ax.set_xlabel("epoch")
        ax.set_ylabel("rate")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save_figure(fig, f"{out_dir}/miss_rates.png")
        written.append("miss_rates.png")
    return written


def export_min_error_vs_k(reports: list[dict], out_dir, figures=True) -> list[str]:
    """Per-report minADE/minFDE against K, confidence-ranked and oracle."""
    header = ["source", "k", "min_ade", "min_fde", "best_k_ade", "best_k_fde"]
    table = []
    for report in reports:
        for k in K_VALUES:
            key = f"k{k}"
            table.append(
                [
                    report["source"],
                    k,
                    report["min_ade_at_k"][key],
                    report["min_fde_at_k"][key],
                    report["best_k_ade"][key],
                    report["best_k_fde"][key],
                ]
            )
    config_hash = reports[0].get("config_hash", "") if reports else ""
    _write_table(f"{out_dir}/min_error_vs_k.csv", header, table, config_hash)
    written = ["min_error_vs_k.csv"]
    if figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        for report in reports:
            ade = [report["min_ade_at_k"][f"k{k}"] for k in K_VALUES]
            best = [report["best_k_ade"][f"k{k}"] for k in K_VALUES]
            ax.plot(K_VALUES, ade, marker="o", label=f"{report['source']} top-K")
            ax.plot(K_VALUES, best, marker="s", ls="--", label=f"{report['source']} best-K")
        ax.set_xlabel("K")
        ax.set_ylabel("minADE [m]")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save_figure(fig, f"{out_dir}/min_error_vs_k.png")
        written.append("min_error_vs_k.png")
    return written


def export_percentiles(reports: list[dict], out_dir, figures=True) -> list[str]:
    header = ["source", "p50", "p90", "p95", "p99"]
    table = [
        [r["source"]] + [r["percentile_ade"][p] for p in ("p50", "p90", "p95", "p99")]
        for r in reports
    ]
    config_hash = reports[0].get("config_hash", "") if reports else ""
    _write_table(f"{out_dir}/percentile_ade.csv", header, table, config_hash)
    written = ["percentile_ade.csv"]
    if figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        positions = range(len(reports))
        for label, marker in (("p50", "o"), ("p90", "s"), ("p95", "^"), ("p99", "x")):
            ax.plot(
                positions,
                [r["percentile_ade"][label] for r in reports],
                marker=marker,
                label=label.upper(),
            )
        ax.set_xticks(list(positions))
        ax.set_xticklabels([r["source"] for r in reports], rotation=30, ha="right", fontsize=7)
        ax.set_ylabel("best-of-M ADE [m]")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save_figure(fig, f"{out_dir}/percentile_ade.png")
        written.append("percentile_ade.png")
    return written


def export_all(log_rows, log_hash, reports, out_dir, figures=True) -> list[str]:
    """Write every table family that has source data; returns file names."""
    written = []
    if log_rows:
        check_log_columns(log_rows)
        written += export_loss_curve(log_rows, out_dir, log_hash, figures)
        written += export_error_curves(log_rows, out_dir, log_hash, figures)
        written += export_miss_rates(log_rows, out_dir, log_hash, figures)
    if reports:
        written += export_min_error_vs_k(reports, out_dir, figures)
        written += export_percentiles(reports, out_dir, figures)
    return written
