"""Comparison tables and figure data for the two-model experiment.

One row per seed pairs the Markov and RNN scores; win fractions summarize
how often the RNN beats the Markov baseline on each metric. Charts are
emitted as self-contained SVG so no plotting dependency is needed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .metrics import MAX_ENTROPY

_BOUND_SLACK = 1e-9
CSV_HEADER = ("seed_id", "markov_gs", "markov_entropy", "rnn_gs", "rnn_entropy")
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class ComparisonRow:
    """Scores for one seed: groove similarity and histogram entropy per model."""

    seed_id: str
    markov_gs: float
    markov_entropy: float
    rnn_gs: float
    rnn_entropy: float

    def __post_init__(self):
        for name in ("markov_gs", "rnn_gs"):
            value = getattr(self, name)
            if not (-_BOUND_SLACK <= value <= 1 + _BOUND_SLACK):
                raise ValueError(f"{name}={value} outside [0, 1]")
        for name in ("markov_entropy", "rnn_entropy"):
            value = getattr(self, name)
            if not (-_BOUND_SLACK <= value <= MAX_ENTROPY + _BOUND_SLACK):
                raise ValueError(f"{name}={value} outside [0, log2 12]")


def win_fractions(rows: Sequence[ComparisonRow]) -> tuple[Fraction, Fraction]:
    """(GS wins, entropy wins) for the RNN, as exact fractions of the rows.

    Higher groove similarity wins; lower entropy wins (clearer tonality).
    Both comparisons are strict, so a tie is not a win.
    """
    if not rows:
        raise ValueError("no rows to summarize")
    gs_wins = sum(1 for r in rows if r.rnn_gs > r.markov_gs)
    entropy_wins = sum(1 for r in rows if r.rnn_entropy < r.markov_entropy)
    return Fraction(gs_wins, len(rows)), Fraction(entropy_wins, len(rows))


def summary_line(rows: Sequence[ComparisonRow]) -> str:
    gs, entropy = win_fractions(rows)
    n = len(rows)
    return (
        f"RNN beats Markov on groove similarity for {float(gs) * 100:.1f}% of seeds "
        f"({int(gs * n)}/{n}) and on histogram entropy for "
        f"{float(entropy) * 100:.1f}% ({int(entropy * n)}/{n})."
    )


def write_comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.seed_id,
                f"{row.markov_gs:.6f}",
                f"{row.markov_entropy:.6f}",
                f"{row.rnn_gs:.6f}",
                f"{row.rnn_entropy:.6f}",
            ]
        )
    return out.getvalue()


def read_comparison_csv(text: str) -> list[ComparisonRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty comparison table") from None
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    rows = []
    for record in reader:
        if not record:
            continue
        if len(record) != 5:
            raise ValueError(f"row {record!r} does not have 5 fields")
        rows.append(
            ComparisonRow(record[0], float(record[1]), float(record[2]), float(record[3]), float(record[4]))
        )
    return rows


def rows_as_dicts(rows: Sequence[ComparisonRow]) -> list[dict]:
    return [
        {
            "seed_id": r.seed_id,
            "markov_gs": r.markov_gs,
            "markov_entropy": r.markov_entropy,
            "rnn_gs": r.rnn_gs,
            "rnn_entropy": r.rnn_entropy,
        }
        for r in rows
    ]


# chart geometry, shared by both renderers
_WIDTH = 640
_HEIGHT = 360
_MARGIN = 48


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]


def _axes() -> list[str]:
    x0, y0 = _MARGIN, _HEIGHT - _MARGIN
    x1, y1 = _WIDTH - _MARGIN, _MARGIN
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]


def line_chart_svg(title: str, series: Mapping[str, Sequence[float]], y_max: float = 1.0) -> str:
    """Multi-series line chart; x is the index within each series."""
    parts = _svg_open(title) + _axes()
    span_x = _WIDTH - 2 * _MARGIN
    span_y = _HEIGHT - 2 * _MARGIN
    longest = max((len(v) for v in series.values()), default=0)
    for i, (label, values) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        if values:
            step = span_x / max(longest - 1, 1)
            points = " ".join(
                f"{_MARGIN + j * step:.2f},{_HEIGHT - _MARGIN - (v / y_max) * span_y:.2f}"
                for j, v in enumerate(values)
            )
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        y_label = _MARGIN + 16 * (i + 1)
        parts.append(
            f'<text x="{_WIDTH - _MARGIN - 4}" y="{y_label}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart_svg(title: str, groups: Mapping[str, Sequence[float]], bin_labels: Iterable[str]) -> str:
    """Grouped bar chart: one cluster per bin, one bar per group within it."""
    labels = list(bin_labels)
    parts = _svg_open(title) + _axes()
    span_x = _WIDTH - 2 * _MARGIN
    span_y = _HEIGHT - 2 * _MARGIN
    y_max = max((max(v, default=0.0) for v in groups.values()), default=0.0) or 1.0
    n_groups = max(len(groups), 1)
    cluster = span_x / max(len(labels), 1)
    bar = cluster / (n_groups + 1)
    for g, (label, values) in enumerate(groups.items()):
        color = _PALETTE[g % len(_PALETTE)]
        for j, value in enumerate(values):
            height = (value / y_max) * span_y
            x = _MARGIN + j * cluster + (g + 0.5) * bar
            y = _HEIGHT - _MARGIN - height
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar:.2f}" height="{height:.2f}" fill="{color}"/>'
            )
        y_label = _MARGIN + 16 * (g + 1)
        parts.append(
            f'<text x="{_WIDTH - _MARGIN - 4}" y="{y_label}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>'
        )
    for j, text in enumerate(labels):
        x = _MARGIN + (j + 0.5) * cluster
        parts.append(
            f'<text x="{x:.2f}" y="{_HEIGHT - _MARGIN + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{text}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
