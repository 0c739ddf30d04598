"""Multiport composition: shunt attachment with port reduction, shorting,
port merging, lumped-element synthesis, and frequency-grid alignment."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .touchstone import (
    ConversionError,
    FrequencyGrid,
    NetworkModel,
    s_to_y,
    s_to_z,
    y_to_s,
)

__all__ = [
    "ShuntElementModel",
    "LumpedRLC",
    "GridCoverageError",
    "lumped_to_shunt",
    "reduce_capacitor_to_shunt",
    "align_grid",
    "attach_shunt",
    "attach_many",
    "short_port",
    "merge_ports",
    "shunt_across_port",
]

OPEN_SENTINEL_OHMS = 1e12


class GridCoverageError(ValueError):
    """Element grid does not span the requested band."""


@dataclass(frozen=True)
class ShuntElementModel:
    """One-terminal shunt impedance z(f) from a node to its reference."""

    grid: FrequencyGrid
    z_shunt: np.ndarray
    label: str = ""

    def __post_init__(self):
        z = np.asarray(self.z_shunt, dtype=complex)
        if z.shape != (len(self.grid),):
            raise ValueError("z_shunt length must match the grid")
        if np.any(z.real < -1e-12):
            worst = float(z.real.min())
            raise ValueError(f"non-passive shunt element: min Re(z) = {worst:g}")
        z.setflags(write=False)
        object.__setattr__(self, "z_shunt", z)


@dataclass(frozen=True)
class LumpedRLC:
    """Series R-L(-C) branch used as a shunt element (VR and die models)."""

    r: float = 0.0
    l: float = 0.0
    c: float = 0.0
    topology: str = "series-RLC-shunt"

    def __post_init__(self):
        if self.r < 0 or self.l < 0 or self.c < 0:
            raise ValueError("element values must be nonnegative")
        if self.r == 0 and self.l == 0 and self.c == 0:
            raise ValueError("at least one of r, l, c must be nonzero")
        if self.topology not in ("series-RLC-shunt", "series-RL-shunt"):
            raise ValueError(f"unknown topology {self.topology!r}")


def lumped_to_shunt(rlc: LumpedRLC, grid: FrequencyGrid,
                    label: str = "") -> ShuntElementModel:
    """z(f) = r + j*2*pi*f*l + 1/(j*2*pi*f*c); the C term applies only for the
    RLC topology with c > 0.  A DC point with c > 0 becomes a large finite
    open-circuit sentinel."""
    f = grid.points
    w = 2.0 * np.pi * f
    z = np.full(f.shape, complex(rlc.r), dtype=complex)
    z += 1j * w * rlc.l
    if rlc.topology == "series-RLC-shunt" and rlc.c > 0:
        pos = f > 0
        z[pos] += 1.0 / (1j * w[pos] * rlc.c)
        z[~pos] = OPEN_SENTINEL_OHMS
    return ShuntElementModel(grid, z, label)


def reduce_capacitor_to_shunt(cap: NetworkModel, mode: str = "shunt_thru",
                              label: str = "") -> ShuntElementModel:
    """Collapse a 1- or 2-port capacitor model to a shunt impedance.

    1-port models take z = Z11.  2-port models default to the shunt-DUT
    through-fixture convention, de-embedded as z = (z0/2) * S21/(1 - S21);
    mode="z11" instead takes the port-1 impedance directly.  A slightly
    negative real part (measurement noise) is clamped to zero.
    """
    if cap.n_ports > 2:
        raise ValueError(f"capacitor model has {cap.n_ports} ports; expected 1 or 2")
    if cap.n_ports == 1 or mode == "z11":
        z = s_to_z(cap).data[:, 0, 0] if cap.kind == "S" else _as_z(cap)[:, 0, 0]
    elif mode == "shunt_thru":
        if cap.kind != "S":
            raise ValueError("shunt_thru de-embedding needs S-parameters")
        s21 = cap.data[:, 1, 0]
        denom = 1.0 - s21
        if np.any(np.abs(denom) < 1e-15):
            raise ConversionError("S21 = 1 cannot be de-embedded",
                                  float(cap.grid.points[int(
                                      np.argmax(np.abs(denom) < 1e-15))]))
        z = (cap.ref_impedance / 2.0) * s21 / denom
    else:
        raise ValueError(f"unknown capacitor model mode {mode!r}")

    z = np.asarray(z, dtype=complex)
    if np.any(z.real < -1e-9):
        warnings.warn(
            f"capacitor model {label or '(unnamed)'} has negative resistance "
            f"(min {z.real.min():.3g} ohm); clamping to passive", stacklevel=2)
    z = np.where(z.real < 0, 1j * z.imag, z)
    return ShuntElementModel(cap.grid, z, label)


def _as_z(model: NetworkModel) -> np.ndarray:
    if model.kind == "Z":
        return model.data
    if model.kind == "S":
        return s_to_z(model).data
    raise ValueError(f"cannot take impedance of kind {model.kind}")


def align_grid(elem: ShuntElementModel, target: FrequencyGrid) -> ShuntElementModel:
    """Interpolate a shunt element onto a new grid, linear in Re/Im versus
    log10(f).  The element must cover the target band; a DC target point
    requires a DC source point."""
    if elem.grid.points.shape == target.points.shape and \
            np.array_equal(elem.grid.points, target.points):
        return elem
    src_f = elem.grid.points
    dst_f = target.points
    if dst_f[-1] > src_f[-1] or dst_f[0] < src_f[0]:
        raise GridCoverageError(
            f"element {elem.label!r} covers [{src_f[0]:g}, {src_f[-1]:g}] Hz "
            f"but [{dst_f[0]:g}, {dst_f[-1]:g}] Hz is required")
    z_out = np.empty(dst_f.shape, dtype=complex)
    dc_dst = dst_f == 0
    if np.any(dc_dst):
        z_out[dc_dst] = elem.z_shunt[0]
    pos_src = src_f > 0
    pos_dst = ~dc_dst
    lx = np.log10(src_f[pos_src])
    ly = elem.z_shunt[pos_src]
    lq = np.log10(dst_f[pos_dst])
    z_out[pos_dst] = np.interp(lq, lx, ly.real) + 1j * np.interp(lq, lx, ly.imag)
    # Interpolation can leave a tiny negative real residue; keep it passive.
    z_out = np.where(z_out.real < 0, 1j * z_out.imag, z_out)
    return ShuntElementModel(target, z_out, elem.label)


def _reflection(z: np.ndarray, z0: float) -> np.ndarray:
    return (z - z0) / (z + z0)


def _check_finite(arr: np.ndarray, grid: FrequencyGrid, what: str):
    bad = ~np.isfinite(arr)
    while bad.ndim > 1:
        bad = bad.any(axis=-1)
    if np.any(bad):
        raise ConversionError(f"ill-conditioned {what}",
                              float(grid.points[int(np.argmax(bad))]))


def _terminate_ports(s: np.ndarray, term_idx: np.ndarray,
                     gammas: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """Terminate the given ports in loads with per-frequency reflection
    coefficients; returns the reduced S-matrix over the remaining ports.

    gammas has shape (n_freq, len(term_idx)).
    """
    n = s.shape[1]
    keep = np.setdiff1d(np.arange(n), term_idx)
    s_aa = s[:, keep[:, None], keep[None, :]]
    s_ap = s[:, keep[:, None], term_idx[None, :]]
    s_pa = s[:, term_idx[:, None], keep[None, :]]
    s_pp = s[:, term_idx[:, None], term_idx[None, :]]
    k = term_idx.size
    lhs = np.broadcast_to(np.eye(k), s_pp.shape) - gammas[:, :, None] * s_pp
    rhs = gammas[:, :, None] * s_pa
    try:
        x = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        for kk in range(lhs.shape[0]):
            try:
                np.linalg.solve(lhs[kk], rhs[kk])
            except np.linalg.LinAlgError:
                raise ConversionError("singular termination system",
                                      float(grid.points[kk])) from None
        raise
    out = s_aa + s_ap @ x
    _check_finite(out, grid, "port termination")
    return out


def attach_shunt(pdn: NetworkModel, port_index: int,
                 elem: ShuntElementModel) -> NetworkModel:
    """Connect z_shunt from the port's terminal to its reference and remove
    the port; returns the electrically equivalent (N-1)-port model."""
    if pdn.kind != "S":
        raise ValueError("attach_shunt expects an S-parameter model")
    if not 0 <= port_index < pdn.n_ports:
        raise IndexError(f"port index {port_index} out of range "
                         f"for {pdn.n_ports} ports")
    elem = align_grid(elem, pdn.grid)
    gamma = _reflection(elem.z_shunt, pdn.ref_impedance)[:, None]
    reduced = _terminate_ports(pdn.data, np.array([port_index]), gamma, pdn.grid)
    labels = tuple(l for i, l in enumerate(pdn.port_labels) if i != port_index)
    return NetworkModel(pdn.grid, reduced, "S", pdn.ref_impedance, labels)


def attach_many(pdn: NetworkModel, assignments) -> NetworkModel:
    """Attach shunt elements at several labeled ports in one reduction.

    `assignments` is an iterable of (port_label, ShuntElementModel); the
    result is order-independent and equals sequential attach_shunt calls.
    """
    if pdn.kind != "S":
        raise ValueError("attach_many expects an S-parameter model")
    pairs = list(assignments)
    if not pairs:
        return pdn
    seen: set[str] = set()
    idx = []
    gammas = np.empty((len(pdn.grid), len(pairs)), dtype=complex)
    for col, (label, elem) in enumerate(pairs):
        if label in seen:
            raise ValueError(f"duplicate attachment at port {label!r}")
        seen.add(label)
        idx.append(pdn.port_index(label))
        aligned = align_grid(elem, pdn.grid)
        gammas[:, col] = _reflection(aligned.z_shunt, pdn.ref_impedance)
    term_idx = np.asarray(idx)
    reduced = _terminate_ports(pdn.data, term_idx, gammas, pdn.grid)
    labels = tuple(l for i, l in enumerate(pdn.port_labels) if i not in set(idx))
    return NetworkModel(pdn.grid, reduced, "S", pdn.ref_impedance, labels)


def short_port(pdn: NetworkModel, port_label: str) -> NetworkModel:
    """Terminate the named port in 0 ohms (reflection -1) and remove it."""
    if pdn.kind != "S":
        raise ValueError("short_port expects an S-parameter model")
    p = pdn.port_index(port_label)
    gamma = np.full((len(pdn.grid), 1), -1.0, dtype=complex)
    reduced = _terminate_ports(pdn.data, np.array([p]), gamma, pdn.grid)
    labels = tuple(l for i, l in enumerate(pdn.port_labels) if i != p)
    return NetworkModel(pdn.grid, reduced, "S", pdn.ref_impedance, labels)


def merge_ports(pdn: NetworkModel, labels, merged_label: str) -> NetworkModel:
    """Hard-parallel the named ports into a single port (their terminals are
    tied together); implemented by admittance row/column summation."""
    labels = list(labels)
    if len(labels) < 2:
        raise ValueError("merge_ports needs at least two ports")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels in merge list")
    merge_idx = [pdn.port_index(l) for l in labels]
    n = pdn.n_ports
    was_s = pdn.kind == "S"
    y = s_to_y(pdn) if was_s else pdn
    if y.kind != "Y":
        from .touchstone import z_to_y
        y = z_to_y(y)

    keep_first = merge_idx[0]
    drop = set(merge_idx[1:])
    new_order = [i for i in range(n) if i not in drop]
    t = np.zeros((n, len(new_order)))
    for col, i in enumerate(new_order):
        t[i, col] = 1.0
    for i in merge_idx[1:]:
        t[i, new_order.index(keep_first)] = 1.0
    merged = np.einsum("ip,fij,jq->fpq", t, y.data, t)

    new_labels = []
    for i in new_order:
        new_labels.append(merged_label if i == keep_first else pdn.port_labels[i])
    out = NetworkModel(pdn.grid, merged, "Y", port_labels=new_labels)
    return y_to_s(out, pdn.ref_impedance) if was_s else out


def shunt_across_port(pdn: NetworkModel, port_label: str,
                      elem: ShuntElementModel) -> NetworkModel:
    """Add a shunt element at a port while keeping the port observable
    (admittance added on the port's diagonal)."""
    p = pdn.port_index(port_label)
    was_s = pdn.kind == "S"
    y = s_to_y(pdn) if was_s else pdn
    if y.kind != "Y":
        from .touchstone import z_to_y
        y = z_to_y(y)
    aligned = align_grid(elem, pdn.grid)
    data = y.data.copy()
    data[:, p, p] += 1.0 / aligned.z_shunt
    out = NetworkModel(pdn.grid, data, "Y", port_labels=pdn.port_labels)
    return y_to_s(out, pdn.ref_impedance) if was_s else out
