"""Deterministic writers for field, matrix and trajectory data.

All numeric output uses 17 significant digits (round-trip exact for
doubles).  Files carry their own metadata as leading ``#`` comment lines;
no timestamps or environment state enter any data file, so identical runs
produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grids import PhaseGrid

__all__ = [
    "fmt",
    "write_field_csv",
    "write_pairs_csv",
    "write_matrix_csv",
    "write_trajectory_csv",
    "write_json",
    "write_svg_heatmap",
    "grid_metadata",
]


def fmt(x) -> str:
    return format(float(x), ".17g")


def grid_metadata(grid: PhaseGrid) -> dict:
    return {
        "p_min": grid.p_min,
        "p_max": grid.p_max,
        "q_min": grid.q_min,
        "q_max": grid.q_max,
        "n_p": grid.n_p,
        "n_q": grid.n_q,
        "units": grid.units,
    }


def _comment_block(meta: dict) -> str:
    lines = [f"# {key}={meta[key]}" for key in sorted(meta)]
    return "\n".join(lines) + "\n" if lines else ""


def write_field_csv(path, grid: PhaseGrid, values: np.ndarray, meta: dict | None = None):
    """Columns p,q,re,im over the full grid (p outer loop)."""
    meta = dict(meta or {})
    meta.update(grid_metadata(grid))
    values = np.asarray(values, dtype=complex)
    p, q = grid.p, grid.q
    rows = []
    for j in range(grid.n_p):
        pj = fmt(p[j])
        row = values[j]
        for l in range(grid.n_q):
            rows.append(f"{pj},{fmt(q[l])},{fmt(row[l].real)},{fmt(row[l].imag)}")
    text = _comment_block(meta) + "p,q,re,im\n" + "\n".join(rows) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def write_pairs_csv(path, header: list[str], columns: list[np.ndarray], meta: dict | None = None):
    """Generic columnar CSV (all columns float, equal length)."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = cols[0].size
    rows = [",".join(fmt(c[i]) for c in cols) for i in range(n)]
    text = _comment_block(dict(meta or {})) + ",".join(header) + "\n" + "\n".join(rows) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def write_matrix_csv(path, matrix: np.ndarray, meta: dict | None = None, value_name: str = "value"):
    """Columns m,n,value for a real matrix."""
    matrix = np.asarray(matrix)
    rows = []
    for m in range(matrix.shape[0]):
        for n in range(matrix.shape[1]):
            rows.append(f"{m},{n},{fmt(np.real(matrix[m, n]))}")
    text = _comment_block(dict(meta or {})) + f"m,n,{value_name}\n" + "\n".join(rows) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def write_trajectory_csv(path, times, means, branch: str, meta: dict | None = None):
    rows = [f"{fmt(t)},{fmt(v)},{branch}" for t, v in zip(times, means)]
    text = _comment_block(dict(meta or {})) + "t,mean,branch\n" + "\n".join(rows) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def write_json(path, payload: dict):
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=1, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def field_json_payload(grid: PhaseGrid, values: np.ndarray, meta: dict | None = None) -> dict:
    """JSON-ready field representation with its grid metadata."""
    values = np.asarray(values, dtype=complex)
    payload = dict(meta or {})
    payload["grid"] = grid_metadata(grid)
    payload["re"] = values.real.tolist()
    payload["im"] = values.imag.tolist()
    return payload


_BAND_COLORS = [
    "#2166ac", "#4393c3", "#92c5de", "#d1e5f0", "#f7f7f7",
    "#fddbc7", "#f4a582", "#d6604d", "#b2182b", "#67001f",
]


def write_svg_heatmap(
    path,
    values: np.ndarray,
    extent: tuple[float, float, float, float],
    title: str = "",
    max_cells: int = 160,
):
    """Minimal filled-band rendering: 10 fixed levels, cell rectangles.

    Large fields are strided down to ``max_cells`` per axis; the CSV output
    stays the authoritative record.
    """
    vals = np.real(np.asarray(values))
    sp = max(1, vals.shape[0] // max_cells)
    sq = max(1, vals.shape[1] // max_cells)
    vals = vals[::sp, ::sq]
    lo, hi = float(vals.min()), float(vals.max())
    if lo < 0 < hi:  # symmetric diverging scale around zero
        hi = max(abs(lo), abs(hi))
        lo = -hi
    if hi == lo:
        hi = lo + 1.0
    bands = np.clip(((vals - lo) / (hi - lo) * 10).astype(int), 0, 9)

    width, height = 640, 640
    n_p, n_q = vals.shape
    cw = width / n_p
    ch = height / n_q
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 30}" '
        f'viewBox="0 0 {width} {height + 30}">',
        f'<title>{title} extent={[fmt(e) for e in extent]} scale=[{fmt(lo)},{fmt(hi)}]</title>',
    ]
    # one rect per run of equal bands along each row keeps the file small
    for j in range(n_p):
        l = 0
        while l < n_q:
            b = bands[j, l]
            l2 = l
            while l2 + 1 < n_q and bands[j, l2 + 1] == b:
                l2 += 1
            x = f"{j * cw:.2f}"
            y = f"{(n_q - 1 - l2) * ch:.2f}"
            h = f"{(l2 - l + 1) * ch:.2f}"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cw:.2f}" height="{h}" fill="{_BAND_COLORS[b]}"/>'
            )
            l = l2 + 1
    parts.append(
        f'<text x="4" y="{height + 20}" font-family="monospace" font-size="12">'
        f"{title} range [{fmt(lo)}, {fmt(hi)}]</text>"
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
