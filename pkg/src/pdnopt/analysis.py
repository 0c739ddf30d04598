"""Per-port loop inductance extraction, capacitor SRF, and Z(f) peak/valley
analysis with Q factors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .network import ShuntElementModel
from .touchstone import NetworkModel, s_to_z
from .network import short_port

__all__ = [
    "PortInductance",
    "PortInductanceReport",
    "CatalogEntry",
    "CapacitorCatalog",
    "Extremum",
    "PeakList",
    "SrfOutOfBandError",
    "loop_inductance",
    "capacitor_srf",
    "capacitance_estimate",
    "build_catalog",
    "find_extrema",
]


class SrfOutOfBandError(ValueError):
    """The |z| minimum sits at the grid boundary: SRF outside modeled band."""


@dataclass(frozen=True)
class PortInductance:
    label: str
    inductance: float
    extraction_hz: float


@dataclass(frozen=True)
class PortInductanceReport:
    """Loop inductances sorted ascending; ports where no inductive band was
    found are listed in `failures` with a reason."""

    entries: tuple[PortInductance, ...]
    failures: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        vals = [e.inductance for e in self.entries]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("report entries must be sorted ascending")
        if any(v <= 0 for v in vals):
            raise ValueError("loop inductance must be positive")

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def to_text(self) -> str:
        lines = [f"{e.label}\t{e.inductance!r}\t{e.extraction_hz!r}"
                 for e in self.entries]
        for label, reason in self.failures:
            lines.append(f"{label}\tFAILED\t{reason}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    model: ShuntElementModel
    srf: float
    capacitance_estimate: float


@dataclass(frozen=True)
class CapacitorCatalog:
    entries: tuple[CatalogEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("capacitor catalog is empty")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate capacitor names in catalog")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> CatalogEntry:
        return self.entries[i]

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def to_text(self) -> str:
        return "\n".join(
            f"{e.name}\t{e.srf!r}\t{e.capacitance_estimate!r}"
            for e in self.entries) + "\n"


@dataclass(frozen=True)
class Extremum:
    frequency: float
    impedance: float
    kind: str  # "peak" or "valley"
    q_factor: float


@dataclass(frozen=True)
class PeakList:
    extrema: tuple[Extremum, ...]

    def __post_init__(self):
        kinds = [e.kind for e in self.extrema]
        if any(a == b for a, b in zip(kinds, kinds[1:])):
            raise ValueError("peaks and valleys must alternate")
        if any(e.q_factor <= 0 for e in self.extrema):
            raise ValueError("q_factor must be positive")

    def total_q(self) -> float:
        return float(sum(e.q_factor for e in self.extrema))


def _extraction_frequency(f: np.ndarray, z: np.ndarray) -> float | None:
    """Highest frequency where the port looks cleanly inductive:
    Im(Z) > 0 and Im(Z) > 3 |Re(Z)|."""
    im, re = z.imag, z.real
    ok = (im > 0) & (im > 3.0 * np.abs(re)) & (f > 0)
    if not np.any(ok):
        return None
    return float(f[np.nonzero(ok)[0][-1]])


def loop_inductance(pdn: NetworkModel, observation_label: str,
                    candidate_labels) -> PortInductanceReport:
    """Short the observation port, then read each candidate port's
    self-impedance and take L = Im(Z)/(2 pi f) at a frequency where the
    reactance dominates."""
    candidate_labels = list(candidate_labels)
    shorted = short_port(pdn, observation_label)
    z = s_to_z(shorted)
    f = z.grid.points
    entries = []
    failures = []
    for label in candidate_labels:
        k = z.port_index(label)
        zkk = z.data[:, k, k]
        f_ext = _extraction_frequency(f, zkk)
        if f_ext is None:
            if np.all(zkk.imag <= 0):
                failures.append((label, "no inductive band (Im Z <= 0)"))
                continue
            warnings.warn(
                f"port {label!r}: reactance never dominates; using the "
                f"maximum frequency", stacklevel=2)
            f_ext = float(f[-1]) if f[-1] > 0 else float(f[f > 0][-1])
        idx = int(np.argmin(np.abs(f - f_ext)))
        ind = float(zkk.imag[idx] / (2.0 * np.pi * f_ext))
        if ind <= 0:
            failures.append((label, "negative inductance reading"))
            continue
        entries.append(PortInductance(label, ind, f_ext))
    entries.sort(key=lambda e: (e.inductance, e.label))
    return PortInductanceReport(tuple(entries), tuple(failures))


def capacitor_srf(cap: ShuntElementModel) -> float:
    """Frequency of minimum |z|, refined by fitting a parabola to |z|^2
    versus log f around the discrete minimum."""
    f = cap.grid.points
    mag = np.abs(cap.z_shunt)
    pos = f > 0
    f, mag = f[pos], mag[pos]
    if f.size < 3:
        raise ValueError("capacitor model needs at least 3 positive-frequency points")
    i = int(np.argmin(mag))
    if i == 0 or i == f.size - 1:
        raise SrfOutOfBandError(
            f"SRF outside modeled band for {cap.label!r}: |z| minimum at "
            f"{'lower' if i == 0 else 'upper'} grid edge {f[i]:g} Hz")
    x = np.log(f[i - 1:i + 2])
    y = mag[i - 1:i + 2] ** 2
    denom = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2])
    a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2]) + x[0] * (y[2] - y[1])) / denom
    b = (x[2] ** 2 * (y[0] - y[1]) + x[1] ** 2 * (y[2] - y[0])
         + x[0] ** 2 * (y[1] - y[2])) / denom
    if a <= 0:
        return float(f[i])
    x_star = -b / (2.0 * a)
    if not x[0] <= x_star <= x[2]:
        return float(f[i])
    return float(np.exp(x_star))


def capacitance_estimate(cap: ShuntElementModel) -> float:
    """C ~= 1/(2 pi f |Im z|) from the lowest-frequency point (reporting only)."""
    f = cap.grid.points
    z = cap.z_shunt
    pos = np.nonzero(f > 0)[0][0]
    im = abs(z.imag[pos])
    if im == 0:
        return 0.0
    return float(1.0 / (2.0 * np.pi * f[pos] * im))


def build_catalog(named_models, srf_fallback: str = "raise") -> CapacitorCatalog:
    """Assemble a catalog from (name, ShuntElementModel) pairs, computing SRF
    and a capacitance estimate per entry.

    srf_fallback: "raise" propagates out-of-band SRF errors; "edge" stores the
    band-edge frequency with a warning instead.
    """
    entries = []
    for name, model in named_models:
        try:
            srf = capacitor_srf(model)
        except SrfOutOfBandError:
            if srf_fallback != "edge":
                raise
            f = model.grid.points[model.grid.points > 0]
            mag = np.abs(model.z_shunt[model.grid.points > 0])
            srf = float(f[int(np.argmin(mag))])
            warnings.warn(f"capacitor {name!r}: SRF outside modeled band; "
                          f"using band edge {srf:g} Hz", stacklevel=2)
        entries.append(CatalogEntry(name, model, srf, capacitance_estimate(model)))
    return CapacitorCatalog(tuple(entries))


def _raw_extrema(mag: np.ndarray) -> list[tuple[int, str]]:
    """Indices of strict local extrema, plateau-aware."""
    out = []
    n = mag.size
    i = 1
    while i < n - 1:
        j = i
        while j < n - 1 and mag[j + 1] == mag[j]:
            j += 1
        if j >= n - 1:
            break
        left, right = mag[i - 1], mag[j + 1]
        center = mag[i]
        mid = (i + j) // 2
        if center > left and center > right:
            out.append((mid, "peak"))
        elif center < left and center < right:
            out.append((mid, "valley"))
        i = j + 1
    return out


def _prune(mag: np.ndarray, ext: list[tuple[int, str]],
           prominence: float) -> list[tuple[int, str]]:
    """Drop extrema whose |Z| is within `prominence` (relative) of both
    neighboring extrema, keeping peaks and valleys alternating."""
    ext = list(ext)
    while True:
        if len(ext) < 1:
            return ext
        # An extremum is noise when its |Z| is within `prominence` (relative)
        # of BOTH flanking extrema (grid edges count as neighbors).
        vals = [mag[i] for i, _ in ext]
        bounds = [mag[0]] + vals + [mag[-1]]
        worst_k, worst_c = -1, prominence
        for k in range(len(ext)):
            lo, hi = bounds[k], bounds[k + 2]
            v = vals[k]
            contrast = max(abs(v - lo), abs(v - hi)) / max(v, 1e-300)
            if contrast < worst_c:
                worst_k, worst_c = k, contrast
        if worst_k < 0:
            break
        del ext[worst_k]
        # Removing one extremum can leave two same-kind neighbors; merge by
        # keeping the more extreme of the pair.
        k = 0
        while k + 1 < len(ext):
            (i1, k1), (i2, k2) = ext[k], ext[k + 1]
            if k1 == k2:
                if k1 == "peak":
                    ext[k] = (i1 if mag[i1] >= mag[i2] else i2, k1)
                else:
                    ext[k] = (i1 if mag[i1] <= mag[i2] else i2, k1)
                del ext[k + 1]
            else:
                k += 1
    return ext


def _q_factor(f: np.ndarray, mag: np.ndarray, idx: int, kind: str,
              lo_bound: int, hi_bound: int) -> float:
    """Q = f_ext / width, width at |Z|/sqrt(2) for peaks (|Z|*sqrt(2) for
    valleys), searched within the bounding extrema; a side that never
    crosses falls back to the other side's half-width doubled."""
    level = mag[idx] / np.sqrt(2.0) if kind == "peak" else mag[idx] * np.sqrt(2.0)

    def crossing(direction: int) -> float | None:
        stop = lo_bound if direction < 0 else hi_bound
        j = idx
        while j != stop:
            j2 = j + direction
            a, b = mag[j], mag[j2]
            hit = (b <= level <= a) if kind == "peak" else (a <= level <= b)
            if hit and a != b:
                # log-f interpolation to the crossing
                t = (level - a) / (b - a)
                lf = np.log10(f[j]) + t * (np.log10(f[j2]) - np.log10(f[j]))
                return float(10.0 ** lf)
            j = j2
        return None

    f0 = f[idx]
    left = crossing(-1)
    right = crossing(+1)
    if left is not None and right is not None:
        width = right - left
    elif right is not None:
        width = 2.0 * (right - f0)
    elif left is not None:
        width = 2.0 * (f0 - left)
    else:
        width = f[hi_bound] - f[lo_bound]
    if width <= 0:
        width = f[hi_bound] - f[lo_bound]
    return float(f0 / width)


def find_extrema(grid, zmag, prominence: float = 0.02) -> PeakList:
    """Local peaks and valleys of an impedance-magnitude curve with relative
    prominence filtering and half-power Q factors."""
    f = np.asarray(getattr(grid, "points", grid), dtype=float)
    mag = np.asarray(zmag, dtype=float)
    if f.size != mag.size:
        raise ValueError("grid and magnitude lengths differ")
    if f.size < 3:
        raise ValueError("need at least 3 points")
    pos = f > 0
    f, mag = f[pos], mag[pos]
    ext = _prune(mag, _raw_extrema(mag), prominence)
    out = []
    for k, (idx, kind) in enumerate(ext):
        lo = ext[k - 1][0] if k > 0 else 0
        hi = ext[k + 1][0] if k + 1 < len(ext) else mag.size - 1
        q = _q_factor(f, mag, idx, kind, lo, hi)
        out.append(Extremum(float(f[idx]), float(mag[idx]), kind, q))
    return PeakList(tuple(out))
