"""Static SVG heatmap and boxplot, written without a plotting library.

Geometry is fixed and every coordinate is formatted with a fixed number of
decimals, so the same table always yields the same bytes.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .analysis import BoxSummary, HeatmapTable
from .errors import EmptySummaries, EmptyTable

FONT = 'font-family="Helvetica, Arial, sans-serif"'
MISSING_FILL = "#d9d9d9"


def diverging_color(rho: float) -> str:
    """Blue (-1) through white (0) to red (+1)."""
    rho = max(-1.0, min(1.0, rho))
    fade = round(255 * (1.0 - abs(rho)))
    if rho >= 0:
        return f"#ff{fade:02x}{fade:02x}"
    return f"#{fade:02x}{fade:02x}ff"


def _text(x: float, y: float, body: str, extra: str = "") -> str:
    return f'<text x="{x:.1f}" y="{y:.1f}" {FONT} {extra}>{escape(body)}</text>'


def _document(width: float, height: float, parts: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">\n'
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>\n'
    )
    return head + "\n".join(parts) + "\n</svg>\n"


def render_heatmap_svg(table: HeatmapTable, title: str | None = None) -> str:
    n_rows, n_cols = table.shape
    if n_rows == 0 or n_cols == 0:
        raise EmptyTable("heatmap table has no cells")
    cell_w, cell_h = 72.0, 30.0
    left, top = 160.0, 150.0
    width = left + n_cols * cell_w + 20.0
    height = top + n_rows * cell_h + 30.0
    title = title or "Average correlation between fidelity and utility metrics"

    parts = [_text(10.0, 22.0, title, 'font-size="14" font-weight="bold"')]
    for j, gen in enumerate(table.col_labels):
        x = left + (j + 0.5) * cell_w
        y = top - 8.0
        parts.append(
            _text(x, y, gen, f'font-size="11" transform="rotate(-45 {x:.1f} {y:.1f})"')
        )
    for i, (metric, row) in enumerate(zip(table.row_labels, table.values)):
        y = top + i * cell_h
        parts.append(
            _text(left - 8.0, y + cell_h / 2 + 4.0, metric, 'font-size="11" text-anchor="end"')
        )
        for j, rho in enumerate(row):
            x = left + j * cell_w
            fill = MISSING_FILL if rho is None else diverging_color(rho)
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" height="{cell_h:.1f}" '
                f'fill="{fill}" stroke="#ffffff" stroke-width="1"/>'
            )
            if rho is not None:
                parts.append(
                    _text(
                        x + cell_w / 2,
                        y + cell_h / 2 + 4.0,
                        f"{rho:.2f}",
                        'font-size="11" text-anchor="middle"',
                    )
                )
    return _document(width, height, parts)


BOX_TITLE = "Distribution of metric-utility correlations across generators"
_BOX_SLOT, _BOX_LEFT, _BOX_TOP, _BOX_PLOT_H = 64.0, 60.0, 40.0, 320.0


def _box_y(v: float) -> float:
    return _BOX_TOP + (1.0 - max(-1.0, min(1.0, v))) / 2.0 * _BOX_PLOT_H


def _box_axes(width: float, title: str) -> list[str]:
    parts = [_text(10.0, 22.0, title, 'font-size="14" font-weight="bold"')]
    for tick in (-1.0, -0.5, 0.0, 0.5, 1.0):
        y = _box_y(tick)
        dash = "" if tick == 0.0 else ' stroke-dasharray="3,3"'
        parts.append(
            f'<line x1="{_BOX_LEFT:.1f}" y1="{y:.1f}" x2="{width - 20.0:.1f}" y2="{y:.1f}" '
            f'stroke="#bbbbbb" stroke-width="1"{dash}/>'
        )
        parts.append(_text(_BOX_LEFT - 6.0, y + 4.0, f"{tick:.1f}", 'font-size="10" text-anchor="end"'))
    return parts


def render_empty_boxplot_svg(note: str, title: str | None = None) -> str:
    """Axes only, with ``note`` in the plot area; used when no correlation is defined."""
    width = _BOX_LEFT + 6 * _BOX_SLOT + 20.0
    parts = _box_axes(width, title or BOX_TITLE)
    parts.append(_text(width / 2, _box_y(0.0) - 10.0, note, 'font-size="12" text-anchor="middle"'))
    return _document(width, _BOX_TOP + _BOX_PLOT_H + 150.0, parts)


def render_boxplot_svg(summaries: Sequence[BoxSummary], title: str | None = None) -> str:
    if not summaries:
        raise EmptySummaries("no summaries to draw")
    slot, left, top, plot_h = _BOX_SLOT, _BOX_LEFT, _BOX_TOP, _BOX_PLOT_H
    width = left + len(summaries) * slot + 20.0
    height = top + plot_h + 150.0
    y_of = _box_y
    parts = _box_axes(width, title or BOX_TITLE)

    for i, s in enumerate(summaries):
        cx = left + (i + 0.5) * slot
        half = slot * 0.3
        parts.append(f'<g class="box" data-metric="{escape(s.metric)}">')
        parts.append(
            f'<line x1="{cx:.1f}" y1="{y_of(s.maximum):.1f}" x2="{cx:.1f}" '
            f'y2="{y_of(s.minimum):.1f}" stroke="#333333" stroke-width="1"/>'
        )
        for v in (s.minimum, s.maximum):
            parts.append(
                f'<line x1="{cx - half / 2:.1f}" y1="{y_of(v):.1f}" x2="{cx + half / 2:.1f}" '
                f'y2="{y_of(v):.1f}" stroke="#333333" stroke-width="1"/>'
            )
        box_top = y_of(s.q3)
        parts.append(
            f'<rect x="{cx - half:.1f}" y="{box_top:.1f}" width="{2 * half:.1f}" '
            f'height="{y_of(s.q1) - box_top:.1f}" fill="#9ecae1" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{cx - half:.1f}" y1="{y_of(s.median):.1f}" x2="{cx + half:.1f}" '
            f'y2="{y_of(s.median):.1f}" stroke="#b30000" stroke-width="2"/>'
        )
        parts.append("</g>")
        ly = top + plot_h + 12.0
        parts.append(
            _text(cx, ly, s.metric, f'font-size="11" text-anchor="end" transform="rotate(-45 {cx:.1f} {ly:.1f})"')
        )
    return _document(width, height, parts)
