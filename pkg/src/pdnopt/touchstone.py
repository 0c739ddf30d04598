"""Touchstone 1.x network-parameter file I/O and S/Z/Y conversions."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrequencyGrid",
    "NetworkModel",
    "TouchstoneHeader",
    "TouchstoneError",
    "ConversionError",
    "parse_touchstone",
    "read_touchstone",
    "write_touchstone",
    "s_to_z",
    "z_to_s",
    "s_to_y",
    "y_to_s",
    "z_to_y",
    "y_to_z",
    "renormalize",
]

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FORMATS = ("MA", "DB", "RI")
_PARAMS = ("S", "Y", "Z")


class TouchstoneError(ValueError):
    """Malformed Touchstone content; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConversionError(ValueError):
    """Parameter conversion failed; names the frequency where it broke."""

    def __init__(self, message: str, frequency: float | None = None):
        self.frequency = frequency
        if frequency is not None:
            message = f"{message} at {frequency:g} Hz"
        super().__init__(message)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing frequencies in Hz; a single 0 Hz DC point is allowed."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("frequency grid must be a nonempty 1-D array")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if pts[0] < 0:
            raise ValueError("negative frequency in grid")
        if pts.size > 1 and pts[0] == 0 and pts[1] <= 0:
            raise ValueError("only a single DC point is allowed")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @property
    def f_min(self) -> float:
        return float(self.points[0])

    @property
    def f_max(self) -> float:
        return float(self.points[-1])

    def covers(self, other: "FrequencyGrid") -> bool:
        return self.f_min <= other.f_min and self.f_max >= other.f_max


@dataclass(frozen=True)
class TouchstoneHeader:
    """Option-line settings with Touchstone 1.x defaults."""

    freq_unit: str = "GHz"
    param: str = "S"
    format: str = "MA"
    resistance: float = 50.0

    def __post_init__(self):
        if self.freq_unit.lower() not in _FREQ_UNITS:
            raise ValueError(f"unsupported frequency unit {self.freq_unit!r}")
        if self.param.upper() not in _PARAMS:
            raise ValueError(f"unsupported parameter kind {self.param!r}")
        if self.format.upper() not in _FORMATS:
            raise ValueError(f"unsupported format {self.format!r}")
        if self.resistance <= 0:
            raise ValueError("reference resistance must be positive")

    @property
    def scale(self) -> float:
        return _FREQ_UNITS[self.freq_unit.lower()]


@dataclass(frozen=True)
class NetworkModel:
    """N-port network parameters on a frequency grid.

    data[k] is the N x N matrix at grid.points[k]; kind is 'S', 'Z' or 'Y'.
    ref_impedance is meaningful for kind='S' only.  Instances are immutable
    and safe to share across threads.
    """

    grid: FrequencyGrid
    data: np.ndarray
    kind: str
    ref_impedance: float = 50.0
    port_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 3 or data.shape[1] != data.shape[2]:
            raise ValueError("data must have shape (n_freq, N, N)")
        if data.shape[0] != len(self.grid):
            raise ValueError("data and grid lengths differ")
        if self.kind not in _PARAMS:
            raise ValueError(f"kind must be one of {_PARAMS}, got {self.kind!r}")
        if self.kind == "S" and self.ref_impedance <= 0:
            raise ValueError("ref_impedance must be > 0 for S-parameters")
        labels = tuple(self.port_labels) or tuple(
            f"P{i + 1}" for i in range(data.shape[1])
        )
        if len(labels) != data.shape[1]:
            raise ValueError("port_labels length does not match port count")
        if len(set(labels)) != len(labels):
            raise ValueError("port labels must be unique")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "port_labels", labels)

    @property
    def n_ports(self) -> int:
        return self.data.shape[1]

    def port_index(self, label: str) -> int:
        try:
            return self.port_labels.index(label)
        except ValueError:
            raise KeyError(f"unknown port label {label!r}") from None

    def with_labels(self, labels) -> "NetworkModel":
        return NetworkModel(self.grid, self.data, self.kind,
                            self.ref_impedance, tuple(labels))


def _infer_ports_from_name(name: str) -> int | None:
    m = re.search(r"\.s(\d+)p$", name.lower())
    return int(m.group(1)) if m else None


def _parse_option_line(line: str, lineno: int) -> TouchstoneHeader:
    tokens = line[1:].split()
    unit, param, fmt, resistance = "GHz", "S", "MA", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        low = tok.lower()
        if low in _FREQ_UNITS:
            unit = tok
        elif tok.upper() in _PARAMS:
            param = tok.upper()
        elif tok.upper() in _FORMATS:
            fmt = tok.upper()
        elif low == "r":
            if i + 1 >= len(tokens):
                raise TouchstoneError("option line 'R' without a value", lineno)
            try:
                resistance = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(
                    f"bad reference resistance {tokens[i + 1]!r}", lineno) from None
            i += 1
        else:
            raise TouchstoneError(f"unknown option token {tok!r}", lineno)
        i += 1
    try:
        return TouchstoneHeader(unit, param, fmt, resistance)
    except ValueError as exc:
        raise TouchstoneError(str(exc), lineno) from None


def _decode(fmt: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    if fmt == "MA":
        return a * np.exp(1j * np.deg2rad(b))
    # DB: magnitude in dB, angle in degrees
    return 10.0 ** (a / 20.0) * np.exp(1j * np.deg2rad(b))


def parse_touchstone(text, n_ports: int | None = None) -> NetworkModel:
    """Parse Touchstone 1.x content into a NetworkModel (grid in Hz).

    `text` is a string or an iterable of lines.  `n_ports` must be given
    unless the content is 1- or 2-port (distinguishable from the value
    count of the first data entry).
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [str(l).rstrip("\n") for l in text]

    header: TouchstoneHeader | None = None
    values: list[float] = []
    value_lines: list[int] = []
    labels: dict[int, str] = {}

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("["):
            raise TouchstoneError(
                "Touchstone 2.x keyword found; only 1.x files are supported", lineno)
        if line.startswith("!"):
            m = re.match(r"!\s*PORT\s+(\d+)\s+(\S+)", line, re.IGNORECASE) or \
                re.match(r"!\s*Port\[(\d+)\]\s*=\s*(\S+)", line)
            if m:
                labels[int(m.group(1))] = m.group(2)
            continue
        if "!" in line:
            line = line.split("!", 1)[0].strip()
            if not line:
                continue
        if line.startswith("#"):
            if header is not None:
                raise TouchstoneError("duplicate option line", lineno)
            header = _parse_option_line(line, lineno)
            continue
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise TouchstoneError(f"bad numeric token {tok!r}", lineno) from None
            value_lines.append(lineno)

    if header is None:
        header = TouchstoneHeader()
    if not values:
        raise TouchstoneError("no data values found")

    if n_ports is None:
        # A 1-port entry is 3 values, a 2-port entry is 9; anything larger
        # is ambiguous without the filename extension.
        if len(values) % 3 == 0 and _looks_one_port(values, header.scale):
            n_ports = 1
        elif len(values) % 9 == 0:
            n_ports = 2
        else:
            raise TouchstoneError("cannot infer port count; pass n_ports")

    per_point = 1 + 2 * n_ports * n_ports
    block = np.asarray(values, dtype=float)
    n_pts = block.size // per_point

    freqs: list[float] = []
    mats: list[np.ndarray] = []
    noise_tail_start = None
    for k in range(n_pts):
        chunk = block[k * per_point:(k + 1) * per_point]
        f = chunk[0] * header.scale
        if freqs and f <= freqs[-1]:
            if n_ports == 2:
                # Noise-parameter section: frequency restarts in 2-port files.
                noise_tail_start = k * per_point
                break
            raise TouchstoneError(
                f"non-monotonic frequency {chunk[0]:g}",
                value_lines[k * per_point])
        a, b = chunk[1::2], chunk[2::2]
        m = _decode(header.format, a, b).reshape(n_ports, n_ports)
        if n_ports == 2:
            # 2-port files store S11 S21 S12 S22.
            m = m.T
        freqs.append(f)
        mats.append(m)

    if noise_tail_start is not None:
        warnings.warn("noise-parameter section skipped", stacklevel=2)
    elif block.size % per_point != 0:
        bad = value_lines[n_pts * per_point] if n_pts * per_point < len(value_lines) \
            else value_lines[-1]
        raise TouchstoneError(
            f"value count {block.size} is not a whole number of "
            f"{per_point}-value entries for {n_ports} ports", bad)
    if not freqs:
        raise TouchstoneError("no data rows decoded")

    port_labels: tuple[str, ...] = ()
    if labels and set(labels) == set(range(1, n_ports + 1)):
        port_labels = tuple(labels[i] for i in range(1, n_ports + 1))
    return NetworkModel(
        grid=FrequencyGrid(np.asarray(freqs)),
        data=np.stack(mats),
        kind=header.param,
        ref_impedance=header.resistance,
        port_labels=port_labels,
    )


def _looks_one_port(values: list[float], scale: float) -> bool:
    if len(values) % 9 != 0:
        return True
    # Both entry sizes divide the total; prefer the one whose frequency
    # column is strictly increasing.
    freqs1 = values[0::3]
    return all(b > a for a, b in zip(freqs1, freqs1[1:]))


def read_touchstone(path, n_ports: int | None = None) -> NetworkModel:
    """Read a .sNp file; the port count comes from the extension unless given."""
    path = str(path)
    if n_ports is None:
        n_ports = _infer_ports_from_name(path)
    with open(path) as fh:
        return parse_touchstone(fh, n_ports=n_ports)


def _fmt(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _encode(fmt: str, v: complex) -> tuple[float, float]:
    if fmt == "RI":
        return v.real, v.imag
    mag = abs(v)
    ang = float(np.rad2deg(np.angle(v))) if mag else 0.0
    if fmt == "MA":
        return mag, ang
    return (20.0 * np.log10(mag) if mag else -400.0), ang


def write_touchstone(model: NetworkModel, format: str = "RI",
                     freq_unit: str = "GHz") -> str:
    """Render a NetworkModel as Touchstone 1.x text (round-trips to 1e-12)."""
    fmt = format.upper()
    if fmt not in _FORMATS:
        raise ValueError(f"unsupported format {format!r}")
    header = TouchstoneHeader(freq_unit, model.kind, fmt,
                              model.ref_impedance if model.kind == "S" else 50.0)
    scale = header.scale
    n = model.n_ports
    out = [f"! {n}-port {model.kind}-parameter data, {len(model.grid)} points"]
    default_labels = tuple(f"P{i + 1}" for i in range(n))
    if model.port_labels != default_labels:
        for i, label in enumerate(model.port_labels, start=1):
            out.append(f"! PORT {i} {label}")
    out.append(f"# {header.freq_unit} {model.kind} {fmt} R {_fmt(header.resistance)}")
    for k, f in enumerate(model.grid.points):
        m = model.data[k]
        if n == 2:
            order = [m[0, 0], m[1, 0], m[0, 1], m[1, 1]]
            pieces = [_fmt(f / scale)]
            for v in order:
                a, b = _encode(fmt, complex(v))
                pieces += [_fmt(a), _fmt(b)]
            out.append(" ".join(pieces))
        else:
            # One matrix row per line; frequency leads the first row.
            for i in range(n):
                pieces = [_fmt(f / scale)] if i == 0 else [""]
                for j in range(n):
                    a, b = _encode(fmt, complex(m[i, j]))
                    pieces += [_fmt(a), _fmt(b)]
                out.append(" ".join(p for p in pieces if p != "") if i == 0
                           else "  " + " ".join(pieces[1:]))
    return "\n".join(out) + "\n"


def _batch_solve(lhs: np.ndarray, rhs: np.ndarray, grid: FrequencyGrid,
                 what: str) -> np.ndarray:
    """Solve lhs[k] @ x[k] = rhs[k] for all k, naming the failing frequency."""
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        for k in range(lhs.shape[0]):
            try:
                np.linalg.solve(lhs[k], rhs[k])
            except np.linalg.LinAlgError:
                raise ConversionError(f"singular matrix in {what}",
                                      float(grid.points[k])) from None
        raise
    bad = ~np.isfinite(sol).all(axis=(1, 2))
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ConversionError(f"non-finite result in {what}",
                              float(grid.points[k]))
    return sol


def s_to_z(model: NetworkModel) -> NetworkModel:
    """Z = z0 (I + S)(I - S)^-1 per frequency."""
    if model.kind != "S":
        raise ValueError(f"expected S-parameters, got {model.kind}")
    n = model.n_ports
    eye = np.eye(n)
    s = model.data
    # Solve (I - S)^T x^T = (I + S)^T so z = x works without explicit inverse:
    # Z = z0 (I+S)(I-S)^-1  <=>  Z (I-S) = z0 (I+S).
    zt = _batch_solve(np.transpose(eye - s, (0, 2, 1)),
                      np.transpose(model.ref_impedance * (eye + s), (0, 2, 1)),
                      model.grid, "s_to_z")
    z = np.transpose(zt, (0, 2, 1))
    return NetworkModel(model.grid, z, "Z", port_labels=model.port_labels)


def z_to_s(model: NetworkModel, z0: float = 50.0) -> NetworkModel:
    """S = (Z - z0 I)(Z + z0 I)^-1 per frequency."""
    if model.kind != "Z":
        raise ValueError(f"expected Z-parameters, got {model.kind}")
    if z0 <= 0:
        raise ValueError("z0 must be positive")
    n = model.n_ports
    eye = np.eye(n)
    z = model.data
    st = _batch_solve(np.transpose(z + z0 * eye, (0, 2, 1)),
                      np.transpose(z - z0 * eye, (0, 2, 1)),
                      model.grid, "z_to_s")
    s = np.transpose(st, (0, 2, 1))
    return NetworkModel(model.grid, s, "S", ref_impedance=z0,
                        port_labels=model.port_labels)


def z_to_y(model: NetworkModel) -> NetworkModel:
    if model.kind != "Z":
        raise ValueError(f"expected Z-parameters, got {model.kind}")
    n = model.n_ports
    eye = np.broadcast_to(np.eye(n), model.data.shape)
    y = _batch_solve(model.data, eye.copy(), model.grid, "z_to_y")
    return NetworkModel(model.grid, y, "Y", port_labels=model.port_labels)


def y_to_z(model: NetworkModel) -> NetworkModel:
    if model.kind != "Y":
        raise ValueError(f"expected Y-parameters, got {model.kind}")
    n = model.n_ports
    eye = np.broadcast_to(np.eye(n), model.data.shape)
    z = _batch_solve(model.data, eye.copy(), model.grid, "y_to_z")
    return NetworkModel(model.grid, z, "Z", port_labels=model.port_labels)


def s_to_y(model: NetworkModel) -> NetworkModel:
    return z_to_y(s_to_z(model))


def y_to_s(model: NetworkModel, z0: float = 50.0) -> NetworkModel:
    return z_to_s(y_to_z(model), z0)


def renormalize(model: NetworkModel, z0: float) -> NetworkModel:
    """Re-reference S-parameters to a new real impedance via the Z domain."""
    if model.kind != "S":
        raise ValueError("renormalize expects S-parameters")
    if model.ref_impedance == z0:
        return model
    return z_to_s(s_to_z(model), z0)
