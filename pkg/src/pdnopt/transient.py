"""Worst-case time-domain analysis: rational fitting of Z(f), closed-form
finite-rise-time step responses, the reverse-pulse peak-to-peak bound, and
SPICE PWL stimulus export."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .network import ShuntElementModel

__all__ = [
    "RationalModel",
    "StepResponse",
    "WorstCaseResult",
    "VectorFitError",
    "HorizonError",
    "vector_fit",
    "check_passivity",
    "step_response",
    "reverse_pulse",
    "pulse_train_response",
    "export_pwl",
    "apply_vr_loadline",
    "extend_to_dc",
]


class VectorFitError(RuntimeError):
    """Rational fit did not reach the required accuracy."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(message)
        self.achieved_error = achieved_error


class HorizonError(ValueError):
    """Response horizon too short for the model to settle."""


@dataclass(frozen=True)
class RationalModel:
    """Stable pole/residue model  Z(s) = sum r_k/(s - p_k) + d + s*e."""

    poles: np.ndarray
    residues: np.ndarray
    d: float = 0.0
    e: float = 0.0
    fit_error: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=complex)
        r = np.asarray(self.residues, dtype=complex)
        if p.shape != r.shape or p.ndim != 1:
            raise ValueError("poles and residues must be matching 1-D arrays")
        if np.any(p.real >= 0):
            raise ValueError("all poles must lie in the open left half-plane")
        if not _conjugate_paired(p) or not _conjugate_paired(r):
            raise ValueError("complex poles/residues must come in conjugate pairs")
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", r)

    @property
    def n_poles(self) -> int:
        return self.poles.size

    def evaluate(self, f_hz) -> np.ndarray:
        """Z(j*2*pi*f) on a frequency array."""
        s = 2j * np.pi * np.asarray(f_hz, dtype=float)
        out = np.full(s.shape, complex(self.d), dtype=complex)
        out += s * self.e
        for p, r in zip(self.poles, self.residues):
            out += r / (s - p)
        return out

    def dc_resistance(self) -> float:
        return float((self.d - np.sum(self.residues / self.poles)).real)

    def slowest_time_constant(self) -> float:
        return float(1.0 / np.min(-self.poles.real))

    def ramp_step_voltage(self, t, rise_time: float) -> np.ndarray:
        """Response to a unit current ramping 0 -> 1 A linearly over
        rise_time, evaluated in closed form at arbitrary times."""
        t = np.asarray(t, dtype=float)
        tr = float(rise_time)
        v = self.d * np.clip(t / tr, 0.0, 1.0)
        v = v + (self.e / tr) * ((t >= 0) & (t < tr))
        if not self.poles.size:
            return v
        p = self.poles
        r_tr = self.residues / tr
        # Beyond ~45 slowest time constants every exponential is below 1e-19,
        # so the pole sum is exactly its settled value in double precision.
        t_flat = 45.0 * self.slowest_time_constant() + tr
        ramp = t <= tr
        mid = (t > tr) & (t < t_flat)
        out = np.zeros(t.shape)
        if np.any(ramp):
            g = _ramp_kernel(p, t[ramp])
            out[ramp] = (g @ r_tr).real
        if np.any(mid):
            # (e^{pt} - e^{p(t-tr)})/p^2 - tr/p, one exponential per point
            scale = (1.0 - np.exp(-p * tr)) / (p * p)
            g = np.exp(t[mid, None] * p[None, :]) * scale[None, :]
            out[mid] = (g @ r_tr).real - np.sum(r_tr * tr / p).real
        far = t >= t_flat
        if np.any(far):
            out[far] = -np.sum(r_tr * tr / p).real
        return v + out


def _ramp_kernel(poles: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(exp(p t) - 1 - p t)/p^2 as an (n_times, n_poles) table, series-expanded
    where p*t is tiny.  Re(p) < 0 and t >= 0 keep the exponent bounded."""
    x = t[:, None] * poles[None, :]
    small = np.abs(x) < 1e-4
    tt = np.broadcast_to(t[:, None] ** 2, x.shape)
    series = 0.5 * tt * (1.0 + x / 3.0 + x * x / 12.0)
    exact = (np.exp(np.where(small, 0.0, x)) - 1.0 - x) / (poles * poles)[None, :]
    return np.where(small, series, exact)


def _conjugate_paired(arr: np.ndarray, rtol: float = 1e-8) -> bool:
    i = 0
    while i < arr.size:
        if abs(arr[i].imag) <= rtol * max(abs(arr[i]), 1e-300):
            i += 1
            continue
        if i + 1 >= arr.size:
            return False
        if abs(arr[i + 1] - np.conj(arr[i])) > 1e-6 * max(abs(arr[i]), 1e-300):
            return False
        i += 2
    return True


def _canonical_poles(poles: np.ndarray) -> np.ndarray:
    """Force exact conjugate pairing; real poles first, pairs sorted by |Im|."""
    poles = np.asarray(poles, dtype=complex)
    reals, pairs = [], []
    used = np.zeros(poles.size, dtype=bool)
    order = np.argsort(np.abs(poles.imag))
    for i in order:
        if used[i]:
            continue
        p = poles[i]
        if abs(p.imag) <= 1e-9 * max(abs(p), 1e-300):
            reals.append(complex(p.real))
            used[i] = True
            continue
        # find the closest unused conjugate partner
        cand = [j for j in range(poles.size)
                if not used[j] and j != i and poles[j].imag * p.imag < 0]
        if not cand:
            reals.append(complex(p.real))  # orphaned: demote to real
            used[i] = True
            continue
        j = min(cand, key=lambda j: abs(poles[j] - np.conj(p)))
        q = 0.5 * (p + np.conj(poles[j]))
        q = complex(q.real, abs(q.imag))
        pairs.append(q)
        used[i] = used[j] = True
    reals.sort(key=lambda p: -p.real)
    pairs.sort(key=lambda p: p.imag)
    out = list(reals)
    for q in pairs:
        out += [q, np.conj(q)]
    return np.asarray(out, dtype=complex)


def _pole_basis(s: np.ndarray, poles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real-coefficient partial-fraction basis and the pole-type index
    (0 real, 1 first of a pair, 2 second of a pair)."""
    n = poles.size
    cindex = np.zeros(n, dtype=int)
    i = 0
    while i < n:
        if poles[i].imag != 0:
            cindex[i], cindex[i + 1] = 1, 2
            i += 2
        else:
            i += 1
    basis = np.empty((s.size, n), dtype=complex)
    for k, p in enumerate(poles):
        if cindex[k] == 0:
            basis[:, k] = 1.0 / (s - p)
        elif cindex[k] == 1:
            basis[:, k] = 1.0 / (s - p) + 1.0 / (s - np.conj(p))
        else:
            basis[:, k] = 1j / (s - poles[k - 1]) - 1j / (s - np.conj(poles[k - 1]))
    return basis, cindex


def _relocate_poles(z: np.ndarray, s: np.ndarray, poles: np.ndarray,
                    weight: np.ndarray) -> np.ndarray:
    """One pole-relocation step: solve the weighted sigma system and take the
    zeros of sigma as the new poles, flipped stable."""
    n = poles.size
    basis, cindex = _pole_basis(s, poles)
    a = np.empty((s.size, 2 * n + 2), dtype=complex)
    a[:, :n] = basis
    a[:, n] = 1.0
    a[:, n + 1] = s
    a[:, n + 2:] = -basis * z[:, None]
    aw = a * weight[:, None]
    bw = z * weight
    a_ri = np.vstack([aw.real, aw.imag])
    b_ri = np.concatenate([bw.real, bw.imag])
    x, *_ = np.linalg.lstsq(a_ri, b_ri, rcond=None)
    c_sigma = x[n + 2:]

    lam = np.diag(poles.real)
    b_vec = np.ones(n)
    for k in range(n):
        if cindex[k] == 1:
            lam[k, k] = lam[k + 1, k + 1] = poles[k].real
            lam[k, k + 1] = poles[k].imag
            lam[k + 1, k] = -poles[k].imag
            b_vec[k], b_vec[k + 1] = 2.0, 0.0
    h = lam - np.outer(b_vec, c_sigma)
    new_poles = np.linalg.eigvals(h)
    flip = new_poles.real > 0
    new_poles[flip] = -np.conj(new_poles[flip])
    return _canonical_poles(new_poles)


def _fit_residues(z: np.ndarray, s: np.ndarray, poles: np.ndarray,
                  weight: np.ndarray) -> tuple[np.ndarray, float, float]:
    basis, cindex = _pole_basis(s, poles)
    n = poles.size
    a = np.empty((s.size, n + 2), dtype=complex)
    a[:, :n] = basis
    a[:, n] = 1.0
    a[:, n + 1] = s
    aw = a * weight[:, None]
    bw = z * weight
    a_ri = np.vstack([aw.real, aw.imag])
    b_ri = np.concatenate([bw.real, bw.imag])
    x, *_ = np.linalg.lstsq(a_ri, b_ri, rcond=None)
    res = np.zeros(n, dtype=complex)
    k = 0
    while k < n:
        if cindex[k] == 1:
            res[k] = x[k] + 1j * x[k + 1]
            res[k + 1] = np.conj(res[k])
            k += 2
        else:
            res[k] = x[k]
            k += 1
    return res, float(x[n]), float(x[n + 1])


def _rel_rms(z_fit: np.ndarray, z: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(z_fit - z) ** 2)
                         / np.mean(np.abs(z) ** 2)))


def _initial_poles(w_lo: float, w_hi: float, n: int) -> np.ndarray:
    n_pairs, n_real = divmod(n, 2)
    betas = np.logspace(np.log10(w_lo), np.log10(w_hi), max(n_pairs, 1))
    poles = []
    if n_real:
        poles.append(complex(-np.sqrt(w_lo * w_hi)))
    for b in betas[:n_pairs]:
        poles += [complex(-b / 100.0, b), complex(-b / 100.0, -b)]
    return _canonical_poles(np.asarray(poles))


def vector_fit(f_hz, z, min_poles: int = 10, max_poles: int = 50,
               rtol: float = 1e-3, fail_tol: float = 1e-2,
               n_iter: int = 12, pole_step: int = 4) -> RationalModel:
    """Pole-relocation rational fit of Z(f) with per-frequency weighting
    proportional to |Z| (peaks matter most).  The pole count grows from
    min_poles until the relative RMS error drops below rtol; exceeding
    fail_tol at max_poles raises VectorFitError."""
    f = np.asarray(f_hz, dtype=float)
    z = np.asarray(z, dtype=complex)
    if f.ndim != 1 or f.shape != z.shape:
        raise ValueError("frequency and impedance arrays must match")
    if f.size < 2 * max_poles:
        raise ValueError(f"{f.size} samples cannot support max_poles={max_poles}; "
                         f"need at least {2 * max_poles}")
    if min_poles < 1 or max_poles < min_poles:
        raise ValueError("need 1 <= min_poles <= max_poles")

    # Scale to order unity for conditioning; un-scale on the way out.
    w_pos = 2.0 * np.pi * f[f > 0]
    s_scale = float(w_pos[-1])
    z_scale = float(np.max(np.abs(z)))
    s = 2j * np.pi * f / s_scale
    zn = z / z_scale
    weight = np.abs(zn)
    weight = np.maximum(weight, 1e-4 * weight.max())

    w_lo = float(w_pos[0]) / s_scale
    w_hi = 1.0

    best: tuple[float, np.ndarray, np.ndarray, float, float] | None = None
    counts = list(range(min_poles, max_poles + 1, pole_step))
    if counts[-1] != max_poles:
        counts.append(max_poles)
    for n_poles in counts:
        poles = _initial_poles(w_lo, w_hi, n_poles)
        stale = 0
        local_best = None
        for _ in range(n_iter):
            poles = _relocate_poles(zn, s, poles, weight)
            res, d, e = _fit_residues(zn, s, poles, weight)
            err = _rel_rms(_eval_pr(s, poles, res, d, e), zn)
            if local_best is None or err < local_best[0]:
                local_best = (err, poles.copy(), res, d, e)
                stale = 0
            else:
                stale += 1
            if err < 0.25 * rtol or stale >= 3:
                break
        if best is None or local_best[0] < best[0]:
            best = local_best
        if best[0] < rtol:
            break

    err, poles, res, d, e = best
    if err > fail_tol:
        raise VectorFitError(
            f"rational fit error {err:.3g} above {fail_tol:g} "
            f"with up to {max_poles} poles", err)
    model = RationalModel(poles * s_scale, res * z_scale * s_scale,
                          d * z_scale, e * z_scale / s_scale, err)
    return model


def _eval_pr(s, poles, res, d, e) -> np.ndarray:
    out = np.full(s.shape, complex(d), dtype=complex)
    out += s * e
    for p, r in zip(poles, res):
        out += r / (s - p)
    return out


def check_passivity(model: RationalModel, grid, refine: int = 4) -> list:
    """Bands (f_lo, f_hi) where Re Z(j w) < -1e-9 on a refined log grid;
    inspection only."""
    f = np.asarray(getattr(grid, "points", grid), dtype=float)
    f = f[f > 0]
    lf = np.log10(f)
    fine = [f[0]]
    for a, b in zip(lf, lf[1:]):
        fine.extend(10.0 ** np.linspace(a, b, refine + 1)[1:])
    fine = np.asarray(fine)
    re = model.evaluate(fine).real
    bad = re < -1e-9
    bands = []
    i = 0
    while i < bad.size:
        if bad[i]:
            j = i
            while j + 1 < bad.size and bad[j + 1]:
                j += 1
            bands.append((float(fine[i]), float(fine[j])))
            i = j + 1
        else:
            i += 1
    return bands


@dataclass(frozen=True)
class StepResponse:
    """Voltage per 1 A ramp-step load on a log-dense time grid."""

    times: np.ndarray
    voltage: np.ndarray
    rise_time: float
    v_dc: float
    model: RationalModel

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.voltage, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and voltage must be matching 1-D arrays")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and strictly increase")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "voltage", v)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def step_response(model: RationalModel, rise_time: float,
                  horizon: float | None = None,
                  points_per_decade: int = 300) -> StepResponse:
    """Closed-form response to a 0 -> 1 A current ramp over rise_time,
    sampled log-densely from rise_time/100 out to the horizon."""
    if rise_time <= 0:
        raise ValueError("rise_time must be positive")
    tau = model.slowest_time_constant()
    if horizon is None:
        horizon = max(25.0 * tau, 10.0 * rise_time)
    if horizon < 20.0 * tau:
        raise HorizonError(
            f"horizon {horizon:g} s is shorter than 20x the slowest time "
            f"constant ({tau:g} s)")
    t0 = rise_time / 100.0
    n = max(int(np.ceil(np.log10(horizon / t0) * points_per_decade)), 50)
    times = np.concatenate([[0.0], np.logspace(np.log10(t0), np.log10(horizon), n)])
    times = np.unique(np.concatenate([times, [rise_time]]))
    v = model.ramp_step_voltage(times, rise_time)
    v_dc = model.dc_resistance()
    excursion = float(np.max(np.abs(v - v_dc)))
    tail = times >= 0.9 * horizon
    if excursion > 0 and np.max(np.abs(v[tail] - v_dc)) > 1e-3 * excursion:
        raise HorizonError("response has not settled within 0.1% by the horizon")
    return StepResponse(times, v, rise_time, v_dc, model)


def _response_extrema(sr: StepResponse, settle_frac: float = 1e-3):
    """(time, value) of significant interior extrema, parabola-refined."""
    t, v = sr.times, sr.voltage
    dv = np.diff(v)
    sign = np.sign(dv)
    nz = sign != 0
    out = []
    idxs = np.nonzero((sign[:-1] * sign[1:] < 0) & nz[:-1] & nz[1:])[0] + 1
    excursion = float(np.max(np.abs(v - sr.v_dc)))
    if excursion == 0:
        return []
    for i in idxs:
        ts, vs = t[i - 1:i + 2], v[i - 1:i + 2]
        denom = (ts[0] - ts[1]) * (ts[0] - ts[2]) * (ts[1] - ts[2])
        a = (ts[2] * (vs[1] - vs[0]) + ts[1] * (vs[0] - vs[2])
             + ts[0] * (vs[2] - vs[1])) / denom
        b = (ts[2] ** 2 * (vs[0] - vs[1]) + ts[1] ** 2 * (vs[2] - vs[0])
             + ts[0] ** 2 * (vs[1] - vs[2])) / denom
        if a != 0:
            t_star = -b / (2.0 * a)
            if ts[0] < t_star < ts[2]:
                # parabola vertex value; the grid is dense enough that the
                # quadratic is an excellent local model
                c = vs[1] - a * ts[1] ** 2 - b * ts[1]
                out.append((float(t_star), float(a * t_star ** 2
                                                 + b * t_star + c)))
                continue
        out.append((float(t[i]), float(v[i])))
    return [(tt, vv) for tt, vv in out
            if abs(vv - sr.v_dc) >= settle_frac * excursion]


def _alternating_subset(extrema, v_dc: float):
    """Largest-|deviation| representative per run of same-sign deviations."""
    kept = []
    for tt, vv in extrema:
        d = vv - v_dc
        if kept and (kept[-1][1] - v_dc) * d > 0:
            if abs(d) > abs(kept[-1][1] - v_dc):
                kept[-1] = (tt, vv)
        else:
            kept.append((tt, vv))
    return kept


def _coalesce_fast_extrema(ext, v_dc: float, min_gap: float):
    """Drop the weaker of any extremum pair closer than a rise time; load
    edges cannot align ripples faster than the excitation itself."""
    ext = list(ext)
    while len(ext) > 1:
        gaps = [ext[i + 1][0] - ext[i][0] for i in range(len(ext) - 1)]
        i = int(np.argmin(gaps))
        if gaps[i] >= min_gap:
            break
        drop = i if abs(ext[i][1] - v_dc) < abs(ext[i + 1][1] - v_dc) else i + 1
        del ext[drop]
    return _alternating_subset(ext, v_dc)


@dataclass(frozen=True)
class WorstCaseResult:
    """Reverse-pulse bound and the load schedule that realizes it.

    pulse_train is a sequence of (time, level) transitions; levels alternate
    between 0 and 1 and each transition ramps over rise_time.
    """

    vpp_per_amp: float
    extrema_times: tuple[float, ...]
    pulse_train: tuple[tuple[float, float], ...]
    rise_time: float
    v_dc: float

    def __post_init__(self):
        levels = [lv for _, lv in self.pulse_train]
        if levels and levels[0] != 1.0:
            raise ValueError("pulse train must start by turning the load on")
        if any(a == b for a, b in zip(levels, levels[1:])):
            raise ValueError("pulse train levels must alternate")


def _build_schedule(ext, v_dc: float, settle: float):
    """Load schedule exciting the given alternating extrema constructively:
    one pass aligns all deviations upward, a mirrored pass (after settling)
    aligns them downward.

    Returns (edges, vpp_aligned, t_up, t_down) where edges is a directed
    [(time, +/-1), ...] list, vpp_aligned the peak-to-peak achieved at the
    two alignment instants, or None when the alternation pattern cannot be
    driven by a 0/1 A load.
    """
    if not ext:
        return [(0.0, 1.0)], v_dc, settle, 0.0
    dev_sum = sum(abs(vv - v_dc) for _, vv in ext)
    t_last = ext[-1][0]
    up = [(t_last - tt, 1.0 if vv > v_dc else -1.0) for tt, vv in reversed(ext)]
    edges = []
    level = 0.0
    shift = 0.0
    if up[0][1] < 0:
        edges.append((0.0, 1.0))
        level = 1.0
        shift = settle
    for tau, d in up:
        if level + d not in (0.0, 1.0):
            return None
        edges.append((tau + shift, d))
        level += d
    t_up = shift + t_last  # instant where everything aligns upward
    start = t_up + settle
    down = [(start + settle + (t_last - tt), -1.0 if vv > v_dc else 1.0)
            for tt, vv in reversed(ext)]
    if level + down[0][1] not in (0.0, 1.0):
        edges.append((start, 1.0 - 2.0 * level))  # settled corrective edge
        level = 1.0 - level
    level_up = sum(d for t, d in edges if t <= t_up)
    for tau, d in down:
        if level + d not in (0.0, 1.0):
            return None
        edges.append((tau, d))
        level += d
    t_down = start + settle + t_last
    vpp = (level_up - level) * v_dc + 2.0 * dev_sum
    return edges, vpp, t_up, t_down


def _schedule_vpp(model: RationalModel, edges, rise_time: float,
                  sr: StepResponse, marks) -> float:
    """Peak-to-peak voltage the schedule achieves: closed-form superposition
    swept on a decimated grid plus the exact alignment instants."""
    budget = 6000
    stride = max(1, (sr.times.size * len(edges)) // budget + 1)
    base = sr.times[::stride]
    grids = [base + tau for tau, _ in edges]
    grids.append(np.asarray(marks, dtype=float))
    grids.append(np.array([0.0, edges[-1][0] + sr.horizon]))
    t = np.unique(np.concatenate(grids))
    train = _edges_to_train(edges)
    w = pulse_train_response(model, train, rise_time, t)
    return float(np.max(w) - np.min(w))


def _edges_to_train(edges) -> list[tuple[float, float]]:
    level = 0.0
    out = []
    for tau, d in edges:
        level += d
        out.append((float(tau), float(level)))
    return out


def reverse_pulse(sr: StepResponse) -> WorstCaseResult:
    """Worst-case peak-to-peak voltage per ampere and the load schedule that
    realizes it.

    Significant extrema of the step response are reduced to an alternating
    sequence about the DC value and excited constructively in
    reverse-chronological order; for such responses the bound equals
    v_dc + 2 * sum |v(t_k) - v_dc|.  The reported value is the peak-to-peak
    response of the constructed schedule itself, so it is reproducible by
    simulating the exported pulse train.
    """
    v_dc = sr.v_dc
    ext = _alternating_subset(_response_extrema(sr), v_dc)
    ext = _coalesce_fast_extrema(ext, v_dc, 1.01 * sr.rise_time)
    settle = sr.horizon

    variants = [ext]
    if ext and ext[0][1] < v_dc:
        variants.append(ext[1:])  # a leading undershoot may not be excitable
    variants.append([])

    best_edges, best_vpp = None, -np.inf
    for variant in variants:
        built = _build_schedule(variant, v_dc, settle)
        if built is None:
            continue
        edges, vpp_aligned, t_up, t_down = built
        edges, moved = _space_edges(edges, sr.rise_time)
        swept = _schedule_vpp(sr.model, edges, sr.rise_time, sr, (t_up, t_down))
        vpp = swept if moved else max(vpp_aligned, swept)
        if vpp > best_vpp:
            best_edges, best_vpp = edges, vpp
        if variant == []:
            break  # the single step is always buildable

    return WorstCaseResult(
        vpp_per_amp=best_vpp,
        extrema_times=tuple(tt for tt, _ in ext),
        pulse_train=tuple(_edges_to_train(best_edges)),
        rise_time=sr.rise_time,
        v_dc=v_dc,
    )


def _space_edges(edges, rise_time: float):
    """Keep transitions at least a rise time apart so ramps never overlap."""
    out = []
    t_prev = None
    moved = False
    for tau, d in edges:
        if t_prev is not None and tau < t_prev + 1.01 * rise_time:
            tau = t_prev + 1.01 * rise_time
            moved = True
        out.append((tau, d))
        t_prev = tau
    return out, moved


def pulse_train_response(model: RationalModel, train, rise_time: float,
                         times) -> np.ndarray:
    """Superpose closed-form ramp-step responses for a (time, level) schedule."""
    t = np.asarray(times, dtype=float)
    v = np.zeros(t.shape)
    level = 0.0
    for tau, new_level in train:
        delta = new_level - level
        level = new_level
        mask = t >= tau
        if np.any(mask):
            v[mask] += delta * model.ramp_step_voltage(t[mask] - tau, rise_time)
    return v


def export_pwl(wc: WorstCaseResult, amplitude: float = 1.0,
               name: str = "LOAD", nodes: tuple[str, str] = ("vout", "0")) -> str:
    """SPICE PWL current source for the worst-case schedule; each transition
    expands into two breakpoints separated by the rise time."""
    if not wc.pulse_train:
        raise ValueError("empty pulse train")
    pts = []
    level = 0.0
    for tau, new_level in wc.pulse_train:
        pts.append((tau, level * amplitude))
        pts.append((tau + wc.rise_time, new_level * amplitude))
        level = new_level
    body = " ".join(f"{t:.6g} {i:.6g}" for t, i in pts)
    return f"I{name} {nodes[0]} {nodes[1]} PWL({body})\n"


def apply_vr_loadline(vr: ShuntElementModel,
                      droop_resistance: float) -> ShuntElementModel:
    """Fold the regulator's load-line (AVP droop) into its branch impedance
    as a series resistance."""
    if droop_resistance < 0:
        raise ValueError("droop resistance must be nonnegative")
    if droop_resistance == 0:
        return vr
    return ShuntElementModel(vr.grid, vr.z_shunt + droop_resistance, vr.label)


def extend_to_dc(f: np.ndarray, z: np.ndarray,
                 f_floor: float = 10.0) -> tuple[np.ndarray, np.ndarray]:
    """Prepend an R+L extrapolation when the data starts above 1 kHz, so the
    rational fit is anchored toward DC."""
    f = np.asarray(f, dtype=float)
    z = np.asarray(z, dtype=complex)
    if f[0] <= 1e3:
        return f, z
    warnings.warn(f"impedance data starts at {f[0]:g} Hz; extrapolating an "
                  f"R+L model down to {f_floor:g} Hz", stacklevel=2)
    band = f <= f[0] * np.sqrt(10.0)
    w = 2.0 * np.pi * f[band]
    r = float(np.mean(z.real[band]))
    l = max(float(np.mean(z.imag[band] / w)), 0.0)
    f_ext = np.logspace(np.log10(f_floor), np.log10(f[0]), 12)[:-1]
    z_ext = r + 2j * np.pi * f_ext * l
    return np.concatenate([f_ext, f]), np.concatenate([z_ext, z])
