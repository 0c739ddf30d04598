"""Frequency-domain scoring against a target impedance curve and the
weighted, baseline-normalized combination the optimizer minimizes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from .analysis import find_extrema

__all__ = [
    "TargetImpedanceCurve",
    "ScoreWeights",
    "ScoreBreakdown",
    "load_target_curve",
    "target_at",
    "band_samples",
    "area_scores",
    "max_violation",
    "flatness_deviation",
    "flatness_q",
    "combined_score",
    "CRITERIA",
]

# Criterion keys, in reporting order.  "area_below" enters the total as a
# credit; everything else is a penalty ratio.
CRITERIA = ("area_above", "area_below", "max_violation",
            "flatness_dev", "flatness_q", "transient")


@dataclass(frozen=True)
class TargetImpedanceCurve:
    """Ordered (frequency Hz, impedance ohm) pairs; log-log piecewise linear."""

    frequencies: np.ndarray
    impedances: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        z = np.asarray(self.impedances, dtype=float)
        if f.ndim != 1 or f.shape != z.shape or f.size < 2:
            raise ValueError("target curve needs at least two frequency/value pairs")
        if np.any(f <= 0) or np.any(z <= 0):
            raise ValueError("target frequencies and impedances must be positive")
        if np.any(np.diff(f) <= 0):
            raise ValueError("target frequencies must be strictly increasing")
        f.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "impedances", z)

    @property
    def f_min(self) -> float:
        return float(self.frequencies[0])

    @property
    def f_max(self) -> float:
        return float(self.frequencies[-1])


def load_target_curve(path) -> TargetImpedanceCurve:
    """Read 'frequency_hz impedance_ohms' pairs, one per line, '#' comments."""
    freqs, zs = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected "
                                 f"'frequency impedance', got {raw!r}")
            freqs.append(float(parts[0]))
            zs.append(float(parts[1]))
    return TargetImpedanceCurve(np.asarray(freqs), np.asarray(zs))


def target_at(curve: TargetImpedanceCurve, f) -> np.ndarray | float:
    """Evaluate the target at f (scalar or array); log Z is linear in log f
    between defining pairs.  Frequencies outside the curve span are an error."""
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(f_arr < curve.f_min) or np.any(f_arr > curve.f_max):
        raise ValueError(
            f"frequency outside target span [{curve.f_min:g}, {curve.f_max:g}] Hz")
    out = 10.0 ** np.interp(np.log10(f_arr), np.log10(curve.frequencies),
                            np.log10(curve.impedances))
    return out if np.ndim(f) else float(out[0])


@dataclass(frozen=True)
class ScoreWeights:
    """Nonnegative weights for each criterion; at least one must be active."""

    area_above: float = 1.0
    area_below_credit: float = 0.0
    max_violation: float = 0.0
    flatness_dev: float = 0.0
    flatness_q: float = 0.0
    transient: float = 0.0

    def __post_init__(self):
        vals = [getattr(self, fld.name) for fld in fields(self)]
        if any(v < 0 for v in vals):
            raise ValueError("weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one weight must be positive")

    def weight_for(self, criterion: str) -> float:
        return getattr(self, "area_below_credit" if criterion == "area_below"
                       else criterion)

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(c for c in CRITERIA if self.weight_for(c) > 0)


@dataclass(frozen=True)
class ScoreBreakdown:
    raw: dict[str, float]
    normalized: dict[str, float]
    total: float

    def to_text(self) -> str:
        lines = ["criterion\traw\tnormalized"]
        for c in CRITERIA:
            if c in self.raw:
                lines.append(f"{c}\t{self.raw[c]!r}\t{self.normalized.get(c, 0.0)!r}")
        lines.append(f"TOTAL\t{self.total!r}\t")
        return "\n".join(lines) + "\n"


def band_samples(f, zmag, curve: TargetImpedanceCurve):
    """Common sampling for band-restricted scoring: the model grid clipped to
    the target span, plus the curve knots and band edges.  |Z| is log-log
    interpolated onto the inserted points."""
    f = np.asarray(f, dtype=float)
    zmag = np.asarray(zmag, dtype=float)
    lo = max(curve.f_min, float(f[f > 0][0]))
    hi = min(curve.f_max, float(f[-1]))
    if lo >= hi:
        raise ValueError("model grid does not intersect the target band")
    knots = curve.frequencies[(curve.frequencies >= lo) & (curve.frequencies <= hi)]
    inside = f[(f >= lo) & (f <= hi)]
    fs = np.unique(np.concatenate([[lo, hi], knots, inside]))
    pos = f > 0
    lf, lz = np.log10(f[pos]), np.log10(np.maximum(zmag[pos], 1e-300))
    z_s = 10.0 ** np.interp(np.log10(fs), lf, lz)
    return fs, z_s, np.asarray(target_at(curve, fs))


def _axis(fs: np.ndarray, weighting: str) -> np.ndarray:
    if weighting == "log":
        return np.log10(fs)
    if weighting == "linear":
        return fs
    raise ValueError(f"unknown frequency weighting {weighting!r}")


def area_scores(f, zmag, curve: TargetImpedanceCurve,
                weighting: str = "log") -> tuple[float, float]:
    """Trapezoidal areas of |Z| above and below the target over the band,
    in ohm * decade for the default log-frequency weighting."""
    fs, z_s, t_s = band_samples(f, zmag, curve)
    x = _axis(fs, weighting)
    above = np.trapezoid(np.maximum(z_s - t_s, 0.0), x)
    below = np.trapezoid(np.maximum(t_s - z_s, 0.0), x)
    return float(above), float(below)


def max_violation(f, zmag, curve: TargetImpedanceCurve) -> float:
    """Largest excursion of |Z| above the target over the band, floored at 0."""
    fs, z_s, t_s = band_samples(f, zmag, curve)
    return float(max(np.max(z_s - t_s), 0.0))


def flatness_deviation(f, zmag, curve: TargetImpedanceCurve,
                       weighting: str = "log") -> float:
    """Mean absolute deviation of |Z| from its band average, both averages
    taken with the band's frequency weighting."""
    fs, z_s, _ = band_samples(f, zmag, curve)
    x = _axis(fs, weighting)
    width = x[-1] - x[0]
    z_bar = np.trapezoid(z_s, x) / width
    return float(np.trapezoid(np.abs(z_s - z_bar), x) / width)


def flatness_q(f, zmag, curve: TargetImpedanceCurve | None = None,
               prominence: float = 0.02) -> float:
    """Sum of extremum Q factors over the scoring band (0 when monotone)."""
    f = np.asarray(f, dtype=float)
    zmag = np.asarray(zmag, dtype=float)
    if curve is not None:
        sel = (f >= curve.f_min) & (f <= curve.f_max)
        if np.count_nonzero(sel) >= 3:
            f, zmag = f[sel], zmag[sel]
    if f.size < 3:
        return 0.0
    return find_extrema(f, zmag, prominence=prominence).total_q()


def normalize_baseline(raw: dict[str, float],
                       weights: ScoreWeights) -> dict[str, float]:
    """Baseline raw values for the active criteria; zeros are replaced by the
    smallest positive float so later ratios stay defined."""
    out = {}
    for c in weights.active:
        v = raw.get(c, 0.0)
        if v <= 0.0:
            warnings.warn(
                f"baseline {c} is zero; normalizing against the smallest "
                f"positive value", stacklevel=2)
            v = np.finfo(float).tiny
        out[c] = float(v)
    return out


def combined_score(raw: dict[str, float], baseline: dict[str, float],
                   weights: ScoreWeights) -> ScoreBreakdown:
    """total = sum_i w_i * raw_i/baseline_i  -  w_credit * below/baseline_below.

    Lower is better; the candidate identical to the baseline totals the sum
    of active penalty weights minus the credit weight.
    """
    normalized: dict[str, float] = {}
    total = 0.0
    for c in weights.active:
        if c not in raw:
            raise KeyError(f"raw criteria missing {c!r}")
        ratio = float(raw[c]) / baseline[c]
        normalized[c] = ratio
        w = weights.weight_for(c)
        total += -w * ratio if c == "area_below" else w * ratio
    return ScoreBreakdown(dict(raw), normalized, float(total))
