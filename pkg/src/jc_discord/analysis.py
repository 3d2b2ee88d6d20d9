"""Oscillation and beat structure of sampled inversion and discord curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d
from scipy.signal import find_peaks

from .closed_form import ThermalWeights, evolution_angles
from .measurement_discord import discord_value

PROMINENCE = 1e-6
#: Envelope dips shallower than this fraction of the envelope range are ignored.
ENVELOPE_PROMINENCE = 0.25
#: Envelopes varying by less than this fraction of their peak count as unmodulated.
MODULATION_FLOOR = 0.01
#: Same-kind spacings closer than this many periods to a beat node are skipped.
NODE_GUARD = 0.5


class InsufficientSpan(ValueError):
    """The signal does not cover enough beats to measure a beat period."""


@dataclass(frozen=True)
class SampledSignal:
    tau: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.ndim != 1 or tau.shape != values.shape:
            raise ValueError("tau and values must be 1-D arrays of equal length")
        if tau.size >= 2:
            steps = np.diff(tau)
            if np.any(steps <= 0):
                raise ValueError("tau must be strictly increasing")
            if np.max(np.abs(steps - steps.mean())) > 1e-12 * max(1.0, float(np.max(np.abs(tau)))):
                raise ValueError("tau grid must be uniform")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])


@dataclass(frozen=True)
class Extremum:
    tau: float
    value: float
    kind: str  # "max" or "min"


@dataclass(frozen=True)
class BeatPrediction:
    """Beat arithmetic of ``sin(tau (r1 + r0)) sin(tau (r1 - r0))``, ``r = sqrt``."""

    n: int
    mean_period: float
    beat_period: float
    oscillations_per_beat: float
    large_n_approx: float
    approx_mean_period: float
    approx_beat_period: float


@dataclass(frozen=True)
class BeatReport:
    mean_period: float
    beat_period: float
    oscillations_per_beat: float
    extrema_count: int
    envelope_minima: list[float] = field(default_factory=list)


def predicted_beats(n: int) -> BeatPrediction:
    """Fast period, beat period and oscillations per beat for ``n`` photons."""
    if int(n) != n or n < 1:
        raise ValueError("beats need n >= 1")
    s = math.sqrt(n + 1) + math.sqrt(n)
    return BeatPrediction(
        n=int(n),
        mean_period=2 * math.pi / s,
        beat_period=math.pi * s,
        oscillations_per_beat=0.5 * (2 * n + 1 + 2 * math.sqrt(n * (n + 1))),
        large_n_approx=2.0 * n,
        approx_mean_period=math.pi / math.sqrt(n),
        approx_beat_period=2 * math.pi * math.sqrt(n),
    )


def sampling_step(n: int, per_period: int = 128) -> float:
    """Grid step giving ``per_period`` samples per fast inversion period."""
    return predicted_beats(max(n, 1)).mean_period / per_period


def detect_extrema(s: SampledSignal) -> list[Extremum]:
    """Local maxima and minima, refined by a 3-point parabola.

    Extrema with prominence below ``PROMINENCE`` are dropped.
    """
    v = s.values
    if v.size < 3:
        raise ValueError("need at least 3 samples")
    h = s.step
    found = []
    for sign, kind in ((1.0, "max"), (-1.0, "min")):
        idx, _ = find_peaks(sign * v, prominence=PROMINENCE)
        for i in idx:
            y0, y1, y2 = v[i - 1], v[i], v[i + 1]
            curv = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / curv if curv != 0 else 0.0
            off = min(1.0, max(-1.0, off))
            found.append(Extremum(float(s.tau[i] + off * h), float(y1 - 0.25 * (y0 - y2) * off), kind))
    found.sort(key=lambda e: e.tau)
    return found


def _same_kind_spacings(extrema, nodes=(), guard=0.0):
    out = []
    nodes = np.asarray(nodes, dtype=float)
    for kind in ("max", "min"):
        t = np.array([e.tau for e in extrema if e.kind == kind])
        for a, b in zip(t[:-1], t[1:]):
            if nodes.size and np.any((nodes > a - guard) & (nodes < b + guard)):
                continue
            out.append(b - a)
    return np.array(out)


def envelope(s: SampledSignal, period: float) -> np.ndarray:
    """Peak-to-peak amplitude in a sliding window two periods wide."""
    width = max(3, int(round(2 * period / s.step)) | 1)
    return (maximum_filter1d(s.values, width, mode="nearest")
            - minimum_filter1d(s.values, width, mode="nearest"))


def beat_report(s: SampledSignal) -> BeatReport:
    """Measure the fast period and the beat period of an oscillating signal.

    The fast period is the mean spacing of consecutive same-kind extrema,
    skipping spacings that straddle a beat node (the phase jumps there).
    Beat nodes are the prominent minima of the sliding peak-to-peak
    envelope; the beat period is their mean spacing.

    Raises
    ------
    InsufficientSpan
        If fewer than two beat nodes are found.
    """
    ext = detect_extrema(s)
    raw = _same_kind_spacings(ext)
    if raw.size == 0:
        raise InsufficientSpan("signal has too few extrema")
    first_guess = float(raw.mean())

    env = envelope(s, first_guess)
    span = float(np.ptp(env))
    if span <= MODULATION_FLOOR * float(env.max()):
        raise InsufficientSpan("signal shows no amplitude modulation")
    idx, _ = find_peaks(-env, prominence=ENVELOPE_PROMINENCE * span)
    nodes = [float(s.tau[i]) for i in idx]
    if len(nodes) < 2:
        raise InsufficientSpan(f"found {len(nodes)} beat node(s); need at least 2")
    beat = float(np.mean(np.diff(nodes)))

    kept = _same_kind_spacings(ext, nodes, NODE_GUARD * first_guess)
    mean_period = float(kept.mean()) if kept.size else first_guess
    return BeatReport(
        mean_period=mean_period,
        beat_period=beat,
        oscillations_per_beat=beat / mean_period,
        extrema_count=len(ext),
        envelope_minima=nodes,
    )


def period_ratio(delta_signal: SampledSignal, inversion_signal: SampledSignal) -> tuple[float, float]:
    """``(fast-period ratio, beat-period ratio)`` of the first signal to the second."""
    if not np.array_equal(delta_signal.tau, inversion_signal.tau):
        raise ValueError("signals must share a tau grid")
    a, b = beat_report(delta_signal), beat_report(inversion_signal)
    return a.mean_period / b.mean_period, a.beat_period / b.beat_period


def maxima_alternation(s: SampledSignal, report: BeatReport) -> list[dict]:
    """Describe, beat by beat, how strongly successive maxima alternate.

    For each window between consecutive beat nodes this returns the number
    of maxima and the fraction of successive differences that change sign
    (1.0 means a strict high/low/high pattern). Descriptive only.
    """
    maxima = [e for e in detect_extrema(s) if e.kind == "max"]
    edges = [float(s.tau[0])] + list(report.envelope_minima) + [float(s.tau[-1])]
    rows = []
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        vals = np.array([e.value for e in maxima if lo <= e.tau < hi])
        d = np.diff(vals)
        flips = np.sum(np.sign(d[1:]) != np.sign(d[:-1])) if d.size > 1 else 0
        rows.append({
            "beat": k,
            "start": lo,
            "end": hi,
            "maxima": int(vals.size),
            "alternation": float(flips / (d.size - 1)) if d.size > 1 else 0.0,
            "high_low_gap": float(np.mean(np.abs(d))) if d.size else 0.0,
        })
    return rows


@dataclass(frozen=True)
class ThetaScan:
    period_check: bool
    period_deviation: float
    reflection_deviation: float
    extrema_locations: list[float]
    extrema_offsets: list[float]

    @property
    def max_offset(self) -> float:
        return max(self.extrema_offsets, default=0.0)


def theta_structure_scan(w: ThermalWeights, n: int, tau: float, grid_size: int = 720) -> ThetaScan:
    """Scan ``D(theta)`` on ``[0, pi)`` at fixed ``tau``.

    Checks ``D(theta + pi/2) = D(theta)``, measures the deviation from
    ``D(pi/2 - theta) = D(theta)`` and locates the extrema, reporting each
    one's distance to the nearest multiple of pi/4.
    """
    if grid_size < 360:
        raise ValueError("grid_size must be at least 360")
    grid_size += grid_size % 4
    step = math.pi / grid_size
    theta = np.arange(grid_size) * step
    ang = evolution_angles(n, tau)
    d = discord_value(w, ang, theta)
    quarter = grid_size // 2
    shifted = discord_value(w, ang, theta + math.pi / 2)
    period_dev = float(np.max(np.abs(shifted - d)))
    reflected = discord_value(w, ang, math.pi / 2 - theta)
    reflection_dev = float(np.max(np.abs(reflected - d)))

    # wrap one period-worth of padding on each side so edge extrema are seen
    pad = quarter
    wrapped = SampledSignal(
        np.arange(-pad, grid_size + pad) * step,
        np.concatenate([d[-pad:], d, d[:pad]]),
    )
    locations = sorted({round(e.tau % math.pi, 12) for e in detect_extrema(wrapped)
                        if 0 <= e.tau < math.pi})
    offsets = [abs(t - math.pi / 4 * round(t / (math.pi / 4))) for t in locations]
    return ThetaScan(
        period_check=period_dev < 1e-12,
        period_deviation=period_dev,
        reflection_deviation=reflection_dev,
        extrema_locations=list(locations),
        extrema_offsets=offsets,
    )
