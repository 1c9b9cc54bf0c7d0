"""Delimited report files and matplotlib figures for the eval and projection
stages. Figures are rendered headless to PNG files next to the CSVs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .classifier import EpochStats, LabelMap
from .evaluation import EvalReport, HitRateReport
from .tsne import ProjectionPoint


def write_embedding_log(epoch_losses: tuple[float, ...], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_pair_loss"])
        for epoch, loss in enumerate(epoch_losses):
            writer.writerow([epoch, repr(loss)])


def write_training_log(stats: list[EpochStats], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "test_accuracy"])
        for s in stats:
            writer.writerow([s.epoch, repr(s.train_loss), repr(s.test_accuracy)])


def read_training_log(path: Path) -> list[EpochStats]:
    stats = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stats.append(
                EpochStats(
                    epoch=int(row["epoch"]),
                    train_loss=float(row["train_loss"]),
                    test_accuracy=float(row["test_accuracy"]),
                )
            )
    return stats


def _label_names(label_map: LabelMap) -> dict[int, tuple[str, str]]:
    return {i: (company, table_type) for company, table_type, i in label_map.entries()}


def write_classification_report(report: EvalReport, label_map: LabelMap, path: Path) -> None:
    """Per-label rows then summary rows (TP-weighted and support-weighted)."""
    names = _label_names(label_map)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["unit", "company", "table_type", "tp", "fp", "fn", "precision", "recall", "accuracy"]
        )
        for m in report.per_label:
            company, table_type = names.get(m.label, ("?", "?"))
            writer.writerow(
                [m.label, company, table_type, m.tp, m.fp, m.fn,
                 f"{m.precision:.6f}", f"{m.recall:.6f}", ""]
            )
        writer.writerow(
            ["ALL", "", "", "", "", "",
             f"{report.weighted_precision:.6f}", f"{report.weighted_recall:.6f}",
             f"{report.accuracy:.6f}"]
        )
        writer.writerow(
            ["ALL_SUPPORT_WEIGHTED", "", "", "", "", "",
             f"{report.support_weighted_precision:.6f}",
             f"{report.support_weighted_recall:.6f}", ""]
        )


def write_rowsim_report(reports: list[HitRateReport], path: Path) -> None:
    """One row per (method, table) plus an AVERAGE row per method."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "table_id", "hits", "total", "hit_rate"])
        for report in reports:
            for t in report.per_table:
                writer.writerow(
                    [report.method.value, t.table_id, t.hits, t.total, f"{t.rate:.6f}"]
                )
            writer.writerow(
                [report.method.value, "AVERAGE", "", "", f"{report.corpus_average:.6f}"]
            )


def figure_label_metrics(report: EvalReport, label_map: LabelMap, path: Path) -> None:
    names = _label_names(label_map)
    labels = [m.label for m in report.per_label]
    ticks = [f"{names.get(l, ('?', '?'))[1][:12]}\n{names.get(l, ('?', '?'))[0][:10]}" for l in labels]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(labels)), 4))
    x = range(len(labels))
    ax.bar([i - 0.2 for i in x], [m.precision for m in report.per_label], 0.4, label="precision")
    ax.bar([i + 0.2 for i in x], [m.recall for m in report.per_label], 0.4, label="recall")
    ax.set_xticks(list(x))
    ax.set_xticklabels(ticks, fontsize=6)
    ax.set_ylim(0, 1.05)
    ax.set_title(f"per-label metrics (accuracy {report.accuracy:.2f}%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def figure_rowsim(reports: list[HitRateReport], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = [r.method.value for r in reports]
    averages = [r.corpus_average for r in reports]
    bars = ax.bar(methods, averages, color=["#2563eb", "#9ca3af", "#f59e0b"][: len(methods)])
    for bar, value in zip(bars, averages):
        ax.text(bar.get_x() + bar.get_width() / 2, value + 1, f"{value:.1f}%", ha="center")
    ax.set_ylabel("hit rate (%)")
    ax.set_ylim(0, 105)
    ax.set_title("row similarity hit rate by method")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def figure_training(stats: list[EpochStats], path: Path) -> None:
    fig, ax_loss = plt.subplots(figsize=(6, 4))
    epochs = [s.epoch for s in stats]
    ax_loss.plot(epochs, [s.train_loss for s in stats], color="#dc2626", label="train loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_acc = ax_loss.twinx()
    ax_acc.plot(epochs, [s.test_accuracy for s in stats], color="#2563eb", label="test accuracy")
    ax_acc.set_ylabel("test accuracy")
    ax_acc.set_ylim(0, 1.05)
    ax_loss.set_title("classifier training")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def figure_projection(points: list[ProjectionPoint], label_names: list[str], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    palette = ("#2563eb", "#16a34a", "#dc2626", "#9333ea", "#f59e0b", "#0891b2")
    seen = sorted({p.label_id for p in points})
    for label in seen:
        xs = [p.x for p in points if p.label_id == label]
        ys = [p.y for p in points if p.label_id == label]
        name = label_names[label] if 0 <= label < len(label_names) else str(label)
        ax.scatter(xs, ys, s=18, color=palette[label % len(palette)], label=name)
    ax.set_title("t-SNE projection of table probability vectors")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
