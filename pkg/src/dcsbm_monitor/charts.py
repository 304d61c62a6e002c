"""Control-chart primitives: Phase I estimation, Shewhart, EWMA.

Series are 1-indexed in the interface (time t runs 1..T, Phase I is
t <= m); arrays are stored 0-indexed internally.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class PhaseIEstimate:
    mu_hat: float
    sigma_hat: float
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("Phase I needs at least 2 observations")
        if self.sigma_hat < 0:
            raise ValueError("sigma_hat must be nonnegative")


@dataclass(frozen=True)
class ControlChart:
    """A plotted series with limits; signals are strict exits in Phase II."""

    kind: str                       # "shewhart" or "ewma"
    base: PhaseIEstimate
    series: np.ndarray              # plotted value at t=1..T
    lcl: np.ndarray
    ucl: np.ndarray
    signals: Tuple[int, ...]        # 1-based Phase II time indices
    lam: Optional[float] = None
    limit_style: Optional[str] = None
    name: str = ""

    def __post_init__(self):
        if (self.lcl > self.ucl).any():
            raise ValueError("LCL must not exceed UCL")

    @property
    def m(self) -> int:
        return self.base.m

    def __len__(self) -> int:
        return len(self.series)


@dataclass(frozen=True)
class RunLength:
    """Steps from a start index to the first signal, possibly censored."""

    length: int
    censored: bool

    def __int__(self) -> int:
        return self.length


def phase1_estimate(s) -> PhaseIEstimate:
    """Mean and moving-range sigma of a Phase I series."""
    s = np.asarray(s, np.float64)
    m = s.size
    if m < 2:
        raise ValueError("Phase I needs at least 2 observations")
    mu = float(s.mean())
    sigma = SQRT_PI / (2.0 * (m - 1)) * float(np.abs(np.diff(s)).sum())
    return PhaseIEstimate(mu, sigma, m)


def _find_signals(series: np.ndarray, lcl: np.ndarray, ucl: np.ndarray, m: int):
    t = np.arange(1, series.size + 1)
    out = (series > ucl) | (series < lcl)
    out &= t > m
    return tuple(int(x) for x in t[out])


def shewhart(s, m: int, name: str = "") -> ControlChart:
    """Individuals chart: flat limits mu_hat +/- 3 sigma_hat."""
    s = np.asarray(s, np.float64)
    if not 2 <= m <= s.size:
        raise ValueError("need 2 <= m <= len(s)")
    base = phase1_estimate(s[:m])
    lcl = np.full(s.size, base.mu_hat - 3.0 * base.sigma_hat)
    ucl = np.full(s.size, base.mu_hat + 3.0 * base.sigma_hat)
    return ControlChart("shewhart", base, s.copy(), lcl, ucl,
                        _find_signals(s, lcl, ucl, m), name=name)


def ewma(s, m: int, lam: float, style: str = "steady-state",
         name: str = "") -> ControlChart:
    """Exponentially weighted chart anchored at Z_m = mu_hat.

    style "steady-state" (default) uses the limiting width
    3 sigma sqrt(lam/(2-lam)); "time-varying" widens the limits with
    t per the exact variance of Z_t.
    """
    s = np.asarray(s, np.float64)
    if not 2 <= m <= s.size:
        raise ValueError("need 2 <= m <= len(s)")
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    if style not in ("steady-state", "time-varying"):
        raise ValueError("style must be 'steady-state' or 'time-varying'")
    base = phase1_estimate(s[:m])
    z = np.array(s, np.float64)
    z[:m] = s[:m]  # Phase I plotted as-is; recursion starts at the boundary
    prev = base.mu_hat
    for i in range(m, s.size):
        prev = lam * s[i] + (1.0 - lam) * prev
        z[i] = prev
    width_ss = 3.0 * base.sigma_hat * math.sqrt(lam / (2.0 - lam))
    if style == "steady-state":
        half = np.full(s.size, width_ss)
    else:
        t_rel = np.maximum(np.arange(1, s.size + 1) - m, 0)
        half = 3.0 * base.sigma_hat * np.sqrt(
            lam / (2.0 - lam) * (1.0 - (1.0 - lam) ** (2.0 * t_rel)))
    lcl = base.mu_hat - half
    ucl = base.mu_hat + half
    sig = _find_signals(z, lcl, ucl, m)
    return ControlChart("ewma", base, z, lcl, ucl, sig,
                        lam=lam, limit_style=style, name=name)


def run_length(chart: ControlChart, start: int,
               cap: Optional[int] = None) -> RunLength:
    """Steps from `start` (1-based, Phase II) to the first signal.

    A signal at `start` itself gives length 1. Censored at the end of
    the series, or at `cap` steps when given.
    """
    if start <= chart.m:
        raise ValueError("start must be a Phase II index (> m)")
    if start > len(chart):
        raise ValueError("start beyond the end of the series")
    horizon = len(chart) - start + 1
    if cap is not None:
        horizon = min(horizon, cap)
    for t in chart.signals:
        if t >= start:
            rl = t - start + 1
            if cap is None or rl <= cap:
                return RunLength(rl, False)
            break
    return RunLength(horizon, True)


# --- export ----------------------------------------------------------


def chart_to_csv(chart: ControlChart, path) -> None:
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, "w") if own else path
    try:
        fh.write("t,value,lcl,ucl,signal\n")
        sig = set(chart.signals)
        for i in range(len(chart)):
            t = i + 1
            fh.write(f"{t},{chart.series[i]:.10g},{chart.lcl[i]:.10g},"
                     f"{chart.ucl[i]:.10g},{1 if t in sig else 0}\n")
    finally:
        if own:
            fh.close()


def _svg_path(xs, ys) -> str:
    parts = [f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(zip(xs, ys))]
    return " ".join(parts)


def chart_to_svg(chart: ControlChart, path, width: int = 720, height: int = 300,
                 title: Optional[str] = None) -> None:
    """Self-contained SVG line plot: series, limits, Phase boundary, signals."""
    T = len(chart)
    pad_l, pad_r, pad_t, pad_b = 52, 14, 28, 30
    iw, ih = width - pad_l - pad_r, height - pad_t - pad_b
    finite = np.concatenate([chart.series, chart.lcl, chart.ucl])
    finite = finite[np.isfinite(finite)]
    lo, hi = float(finite.min()), float(finite.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    lo -= 0.06 * span
    hi += 0.06 * span

    def X(t):  # t is 1-based
        return pad_l + (t - 1) / max(T - 1, 1) * iw

    def Y(v):
        return pad_t + (hi - v) / (hi - lo) * ih

    ts = np.arange(1, T + 1)
    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title or chart.name:
        out.append(f'<text x="{width/2:.0f}" y="16" text-anchor="middle" font-size="13">'
                   f'{title or chart.name}</text>')
    # axes
    out.append(f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t+ih}" stroke="black"/>')
    out.append(f'<line x1="{pad_l}" y1="{pad_t+ih}" x2="{pad_l+iw}" y2="{pad_t+ih}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = Y(v)
        out.append(f'<line x1="{pad_l-3}" y1="{y:.2f}" x2="{pad_l}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{pad_l-6}" y="{y+3:.2f}" text-anchor="end">{v:.3g}</text>')
    for t in np.unique(np.linspace(1, T, min(8, T)).round().astype(int)):
        x = X(t)
        out.append(f'<line x1="{x:.2f}" y1="{pad_t+ih}" x2="{x:.2f}" y2="{pad_t+ih+3}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{pad_t+ih+15}" text-anchor="middle">{t}</text>')
    # Phase boundary
    xb = X(chart.m) if T > 1 else pad_l
    out.append(f'<line x1="{xb:.2f}" y1="{pad_t}" x2="{xb:.2f}" y2="{pad_t+ih}" '
               'stroke="gray" stroke-dasharray="4,3"/>')
    # limits
    out.append(f'<path d="{_svg_path(X(ts), Y(chart.lcl))}" fill="none" '
               'stroke="red" stroke-dasharray="6,3"/>')
    out.append(f'<path d="{_svg_path(X(ts), Y(chart.ucl))}" fill="none" '
               'stroke="red" stroke-dasharray="6,3"/>')
    # center line
    out.append(f'<line x1="{pad_l}" y1="{Y(chart.base.mu_hat):.2f}" x2="{pad_l+iw}" '
               f'y2="{Y(chart.base.mu_hat):.2f}" stroke="green" stroke-dasharray="2,3"/>')
    # series
    out.append(f'<path d="{_svg_path(X(ts), Y(chart.series))}" fill="none" stroke="steelblue"/>')
    for t in chart.signals:
        out.append(f'<circle cx="{X(t):.2f}" cy="{Y(chart.series[t-1]):.2f}" r="3.2" '
                   'fill="red" stroke="darkred"/>')
    out.append("</svg>")
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, "w") if own else path
    try:
        fh.write("\n".join(out) + "\n")
    finally:
        if own:
            fh.close()
