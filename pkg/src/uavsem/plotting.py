"""Dependency-free SVG rendering of sweep curves and UAV trajectories."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .channel import footprint_radius
from .env import EpisodeTrace

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
METRIC_LABELS = {
    "mean_psnr_all": "mean PSNR over all devices (dB)",
    "mean_psnr_visited": "mean PSNR over visited devices (dB)",
    "visited_mean": "devices visited",
    "goal_rate": "goal reach rate",
}


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.floor(lo / step) * step
    ticks, x = [], start
    while x <= hi + 1e-9 * step:
        ticks.append(round(x, 10))
        x += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:g}" if abs(v) < 1e4 else f"{v / 1e3:g}k"


class _Canvas:
    def __init__(self, width=640, height=420, margin=(60, 20, 30, 55)):
        self.w, self.h = width, height
        self.ml, self.mr, self.mt, self.mb = margin
        self.parts = []

    def frame(self, xlim, ylim):
        self.xlim, self.ylim = xlim, ylim

    def px(self, x: float) -> float:
        x0, x1 = self.xlim
        return self.ml + (x - x0) / (x1 - x0) * (self.w - self.ml - self.mr)

    def py(self, y: float) -> float:
        y0, y1 = self.ylim
        return self.h - self.mb - (y - y0) / (y1 - y0) * (self.h - self.mt - self.mb)

    def scale(self) -> float:
        return (self.w - self.ml - self.mr) / (self.xlim[1] - self.xlim[0])

    def add(self, s: str):
        self.parts.append(s)

    def axes(self, xticks, yticks, xlabel, ylabel, title=""):
        x0, x1 = self.px(self.xlim[0]), self.px(self.xlim[1])
        y0, y1 = self.py(self.ylim[0]), self.py(self.ylim[1])
        self.add(f'<rect class="axes" x="{x0:.1f}" y="{y1:.1f}" width="{x1 - x0:.1f}" height="{y0 - y1:.1f}" fill="none" stroke="#333"/>')
        for t in xticks:
            if self.xlim[0] - 1e-9 <= t <= self.xlim[1] + 1e-9:
                x = self.px(t)
                self.add(f'<line x1="{x:.1f}" y1="{y0:.1f}" x2="{x:.1f}" y2="{y0 + 4:.1f}" stroke="#333"/>')
                self.add(f'<text class="tick" x="{x:.1f}" y="{y0 + 16:.1f}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
        for t in yticks:
            if self.ylim[0] - 1e-9 <= t <= self.ylim[1] + 1e-9:
                y = self.py(t)
                self.add(f'<line x1="{x0 - 4:.1f}" y1="{y:.1f}" x2="{x0:.1f}" y2="{y:.1f}" stroke="#333"/>')
                self.add(f'<text class="tick" x="{x0 - 7:.1f}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
        self.add(f'<text x="{(x0 + x1) / 2:.1f}" y="{self.h - 12:.1f}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
        self.add(f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')
        if title:
            self.add(f'<text class="title" x="{(x0 + x1) / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.parts, "</svg>"]) + "\n"


def sweep_svg(rows: Sequence[dict], metric: str = "mean_psnr_all") -> str:
    """Line plot of one sweep metric against the swept value, one line per policy.

    ``rows`` are dicts as returned by ``read_sweep_csv``. Error bars show one
    sample standard deviation when the std column exists.
    """
    if not rows:
        raise ValueError("no sweep rows to plot")
    if metric not in rows[0]:
        raise ValueError(f"unknown metric {metric!r}")
    std_key = {"mean_psnr_all": "std_psnr_all", "mean_psnr_visited": "std_psnr_visited",
               "visited_mean": "visited_std"}.get(metric)
    policies = list(dict.fromkeys(r["policy"] for r in rows))
    xs = [float(r["value"]) for r in rows]
    lo = [float(r[metric]) - (float(r[std_key]) if std_key else 0) for r in rows]
    hi = [float(r[metric]) + (float(r[std_key]) if std_key else 0) for r in rows]
    pad = 0.05 * (max(hi) - min(lo) or 1.0)
    c = _Canvas()
    xspan = (max(xs) - min(xs)) or 1.0
    c.frame((min(xs) - 0.03 * xspan, max(xs) + 0.03 * xspan), (min(lo) - pad, max(hi) + pad))
    axis = rows[0].get("axis", "")
    xlabel = {"bandwidth": "device bandwidth (Hz)", "velocity": "baseline speed (m/s)"}.get(axis, axis)
    c.axes(_nice_ticks(min(xs), max(xs)), _nice_ticks(min(lo) - pad, max(hi) + pad),
           xlabel, METRIC_LABELS.get(metric, metric), title=f"{metric} vs {axis}")
    for k, pol in enumerate(policies):
        color = PALETTE[k % len(PALETTE)]
        pts = sorted((float(r["value"]), float(r[metric]), float(r[std_key]) if std_key else 0.0)
                     for r in rows if r["policy"] == pol)
        coords = " ".join(f"{c.px(x):.1f},{c.py(y):.1f}" for x, y, _ in pts)
        c.add(f'<polyline class="series" data-policy="{escape(pol)}" points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y, s in pts:
            if s > 0:
                c.add(f'<line class="errbar" x1="{c.px(x):.1f}" y1="{c.py(y - s):.1f}" x2="{c.px(x):.1f}" y2="{c.py(y + s):.1f}" stroke="{color}"/>')
            c.add(f'<circle class="marker" cx="{c.px(x):.1f}" cy="{c.py(y):.1f}" r="3" fill="{color}"/>')
        ly = c.mt + 14 + 16 * k
        lx = c.w - c.mr - 110
        c.add(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        c.add(f'<text class="legend" x="{lx + 24}" y="{ly}" font-size="11">{escape(pol)}</text>')
    return c.svg()


def trajectory_svg(traces: Sequence[EpisodeTrace], labels: Sequence[str] = (), arena=None) -> str:
    """Top view of one or more trajectories over the device field.

    Devices are drawn as discs whose radius is the ground footprint of the
    communication range at the flight altitude, taken from the first trace.
    """
    if not traces:
        raise ValueError("no traces to plot")
    meta = traces[0].meta
    devices = meta["devices"]
    radius = footprint_radius(meta["comm_range"], meta["altitude"])
    pts = [tuple(meta["start"]), tuple(meta["goal"]), *map(tuple, devices)]
    for tr in traces:
        pts += [(r["x"], r["y"]) for r in tr.records]
    if arena is None:
        xmax = max(p[0] for p in pts) + radius
        ymax = max(p[1] for p in pts) + radius
        arena = (min(0.0, min(p[0] for p in pts) - radius), min(0.0, min(p[1] for p in pts) - radius), xmax, ymax)
    x0, y0, x1, y1 = arena
    width = 640
    height = int(round(55 + 30 + (width - 80) * (y1 - y0) / (x1 - x0)))
    c = _Canvas(width, height)
    c.frame((x0, x1), (y0, y1))
    c.axes(_nice_ticks(x0, x1), _nice_ticks(y0, y1), "x (m)", "y (m)", title="UAV trajectories")
    r_px = radius * c.scale()
    for i, (dx, dy) in enumerate(devices):
        c.add(f'<circle class="device" data-id="{i}" cx="{c.px(dx):.1f}" cy="{c.py(dy):.1f}" r="{r_px:.1f}" '
              f'fill="#999" fill-opacity="0.25" stroke="#666"/>')
        c.add(f'<text x="{c.px(dx):.1f}" y="{c.py(dy) + 4:.1f}" text-anchor="middle" font-size="10">{i}</text>')
    for k, tr in enumerate(traces):
        color = PALETTE[k % len(PALETTE)]
        m = tr.meta
        path = [tuple(m["q0"][:2])] + [(r["x"], r["y"]) for r in tr.records]
        coords = " ".join(f"{c.px(x):.1f},{c.py(y):.1f}" for x, y in path)
        label = labels[k] if k < len(labels) else f"trace {k}"
        c.add(f'<polyline class="trajectory" data-label="{escape(label)}" points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = c.mt + 14 + 16 * k
        lx = c.w - c.mr - 120
        c.add(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        c.add(f'<text class="legend" x="{lx + 24}" y="{ly}" font-size="11">{escape(label)}</text>')
    for name, (px_, py_), shape in (("start", meta["start"], "#000"), ("goal", meta["goal"], "#d62728")):
        c.add(f'<rect class="{name}" x="{c.px(px_) - 5:.1f}" y="{c.py(py_) - 5:.1f}" width="10" height="10" fill="{shape}"/>')
    return c.svg()
