"""Synthetic lumped PDN boards and vendor-style capacitor models for tests,
demos, and benchmarking.  Boards are built by nodal analysis of an RLC mesh
and exposed as S-parameter NetworkModels, as an extraction tool would emit."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import CapacitorCatalog, build_catalog
from .network import LumpedRLC, ShuntElementModel, lumped_to_shunt
from .scoring import TargetImpedanceCurve
from .touchstone import FrequencyGrid, NetworkModel, write_touchstone, z_to_s

__all__ = [
    "Branch",
    "circuit_z",
    "circuit_model",
    "log_grid",
    "capacitor_two_port",
    "CapSpec",
    "DEFAULT_CAP_FAMILY",
    "cap_shunt",
    "acceptance_board",
    "large_board",
    "Scenario",
    "acceptance_scenario",
    "write_scenario_files",
]


@dataclass(frozen=True)
class Branch:
    """Series R-L-C between two nodes (0 is ground); omit C with c=0."""

    n1: int
    n2: int
    r: float = 0.0
    l: float = 0.0
    c: float = 0.0


def log_grid(f_lo: float = 1e3, f_hi: float = 500e6,
             points_per_decade: int = 30) -> FrequencyGrid:
    decades = np.log10(f_hi / f_lo)
    n = int(np.ceil(decades * points_per_decade)) + 1
    return FrequencyGrid(np.logspace(np.log10(f_lo), np.log10(f_hi), n))


def _branch_y(b: Branch, w: np.ndarray) -> np.ndarray:
    z = b.r + 1j * w * b.l
    if b.c > 0:
        z = z + 1.0 / (1j * w * b.c)
    return 1.0 / z


def circuit_z(branches, ports, grid: FrequencyGrid) -> np.ndarray:
    """Port Z-matrix of an RLC node mesh; `ports` maps labels to node ids."""
    f = grid.points
    if np.any(f <= 0):
        raise ValueError("nodal synthesis needs positive frequencies")
    w = 2.0 * np.pi * f
    n_nodes = max(max(b.n1, b.n2) for b in branches)
    y = np.zeros((f.size, n_nodes, n_nodes), dtype=complex)
    for b in branches:
        yb = _branch_y(b, w)
        i, j = b.n1 - 1, b.n2 - 1
        if b.n1 > 0:
            y[:, i, i] += yb
        if b.n2 > 0:
            y[:, j, j] += yb
        if b.n1 > 0 and b.n2 > 0:
            y[:, i, j] -= yb
            y[:, j, i] -= yb
    z_full = np.linalg.inv(y)
    nodes = [n - 1 for _, n in ports]
    return z_full[:, np.asarray(nodes)[:, None], np.asarray(nodes)[None, :]]


def circuit_model(branches, ports, grid: FrequencyGrid,
                  z0: float = 50.0) -> NetworkModel:
    """S-parameter NetworkModel of the mesh, referenced like an extracted
    Touchstone file."""
    z = circuit_z(branches, ports, grid)
    zmod = NetworkModel(grid, z, "Z", port_labels=[lbl for lbl, _ in ports])
    return z_to_s(zmod, z0)


@dataclass(frozen=True)
class CapSpec:
    name: str
    c: float
    esr: float
    esl: float

    @property
    def srf(self) -> float:
        return 1.0 / (2.0 * np.pi * np.sqrt(self.esl * self.c))


# A small MLCC family spanning SRFs from ~1 MHz to ~100 MHz: larger packages
# bring more capacitance and lower ESR but higher mounting inductance.  The
# last entry is a controlled-ESR part that damps inter-capacitor
# anti-resonances at the cost of a shallower impedance notch.
DEFAULT_CAP_FAMILY = (
    CapSpec("cap22uF1210", 22e-6, 0.8e-3, 1.20e-9),
    CapSpec("cap1uF0603", 1.0e-6, 3.0e-3, 0.55e-9),
    CapSpec("cap47nF0402", 47e-9, 5.0e-3, 0.38e-9),
    CapSpec("cap10nF0201", 10e-9, 4.0e-3, 0.30e-9),
    CapSpec("cap1uFesr", 1.0e-6, 60e-3, 0.50e-9),
)


def cap_shunt(spec: CapSpec, grid: FrequencyGrid) -> ShuntElementModel:
    return lumped_to_shunt(LumpedRLC(spec.esr, spec.esl, spec.c), grid, spec.name)


def capacitor_two_port(spec: CapSpec, grid: FrequencyGrid,
                       z0: float = 50.0) -> NetworkModel:
    """Vendor-style 2-port model: the part mounted shunt across a through
    line (S21 = 2z/(2z + z0))."""
    z = cap_shunt(spec, grid).z_shunt
    s = np.empty((len(grid), 2, 2), dtype=complex)
    s11 = -z0 / (2.0 * z + z0)
    s21 = 2.0 * z / (2.0 * z + z0)
    s[:, 0, 0] = s[:, 1, 1] = s11
    s[:, 0, 1] = s[:, 1, 0] = s21
    return NetworkModel(grid, s, "S", ref_impedance=z0)


def acceptance_board(n_sites: int = 36, n_load_pins: int = 4,
                     grid: FrequencyGrid | None = None,
                     seed: int = 2021) -> NetworkModel:
    """A small PCB power domain: load pins feed a package/die node behind a
    spreading network with `n_sites` capacitor mounting ports and a VR port.

    Ports: load pins 'U1_P<k>', sites 'C<i>', regulator 'VR1'.
    """
    if grid is None:
        grid = log_grid()
    rng = np.random.default_rng(seed)

    branches: list[Branch] = []
    ports: list[tuple[str, int]] = []

    die_node = 1
    plane_a, plane_b = 2, 3
    vr_node = 4
    next_node = 5

    # package path from the die node down to the near plane region
    branches.append(Branch(die_node, plane_a, r=0.4e-3, l=0.16e-9))
    # plane spreading between the two board regions
    branches.append(Branch(plane_a, plane_b, r=0.6e-3, l=0.55e-9))
    # bare plane capacitance on both regions
    branches.append(Branch(plane_a, 0, r=1.2e-3, c=120e-9))
    branches.append(Branch(plane_b, 0, r=1.5e-3, c=180e-9))
    # board route to the regulator
    branches.append(Branch(plane_b, vr_node, r=0.5e-3, l=1.8e-9))
    ports.append(("VR1", vr_node))

    for k in range(n_load_pins):
        node = next_node
        next_node += 1
        branches.append(Branch(die_node, node, r=0.05e-3, l=0.01e-9))
        ports.append((f"U1_P{k + 1}", node))

    for i in range(n_sites):
        node = next_node
        next_node += 1
        region = plane_a if i < n_sites // 3 else plane_b
        # mounting path: nearer sites see less inductance
        l_mnt = float(rng.uniform(0.08e-9, 0.45e-9) if region == plane_a
                      else rng.uniform(0.4e-9, 2.2e-9))
        r_mnt = float(rng.uniform(0.3e-3, 1.2e-3))
        branches.append(Branch(region, node, r=r_mnt, l=l_mnt))
        ports.append((f"C{i + 1}", node))

    # put the load pins first so observation labels lead the port list
    ports.sort(key=lambda p: (not p[0].startswith("U1_"), p[0]))
    return circuit_model(branches, ports, grid)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run an optimization on a synthetic board."""

    board: NetworkModel
    catalog: CapacitorCatalog
    curve: TargetImpedanceCurve
    die: ShuntElementModel
    vr: ShuntElementModel
    observation_ports: tuple[str, ...]
    vr_port: str
    rise_time: float


def acceptance_scenario(n_sites: int = 36) -> Scenario:
    """The bundled 36-site experiment: lumped die capacitance forming a
    ~40 MHz package anti-resonance, a 10 mOhm + 10 nH regulator, a 5 mOhm
    target rising at 30 MHz, and a 10 ns load edge."""
    board = acceptance_board(n_sites=n_sites)
    grid = board.grid
    catalog = build_catalog(
        [(s.name, cap_shunt(s, grid)) for s in DEFAULT_CAP_FAMILY])
    curve = TargetImpedanceCurve(np.array([1e4, 30e6, 100e6]),
                                 np.array([5e-3, 5e-3, 23e-3]))
    die = lumped_to_shunt(LumpedRLC(r=2e-3, c=150e-9), grid, "die")
    vr = lumped_to_shunt(LumpedRLC(r=10e-3, l=10e-9,
                                   topology="series-RL-shunt"), grid, "vr")
    return Scenario(board, catalog, curve, die, vr,
                    tuple(f"U1_P{k}" for k in (1, 2, 3, 4)), "VR1", 10e-9)


def write_scenario_files(out_dir, scenario: Scenario | None = None,
                         weights: dict | None = None,
                         ga_lines: dict | None = None) -> Path:
    """Materialize a scenario as CLI inputs (board .sNp, capacitor .s2p
    files, list file, target curve, config); returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = scenario or acceptance_scenario()
    grid = sc.board.grid
    n = sc.board.n_ports
    (out / f"board.s{n}p").write_text(write_touchstone(sc.board, "RI"))
    names = []
    for spec in DEFAULT_CAP_FAMILY:
        two_port = capacitor_two_port(spec, grid)
        (out / f"{spec.name}.s2p").write_text(write_touchstone(two_port, "RI"))
        names.append(f"{spec.name}.s2p")
    (out / "caps.txt").write_text(
        "# candidate capacitor models\n" + "\n".join(names) + "\n")
    (out / "target.txt").write_text(
        "# frequency_hz impedance_ohms\n" + "\n".join(
            f"{f!r} {z!r}" for f, z in zip(sc.curve.frequencies,
                                           sc.curve.impedances)) + "\n")
    weights = weights or {"area_above": "1.0"}
    w_lines = "\n".join(f"{k} = {v}" for k, v in weights.items())
    ga_lines = ga_lines or {}
    g_lines = "\n".join(f"{k} = {v}" for k, v in ga_lines.items())
    (out / "run.cfg").write_text(f"""\
[model]
pdn = board.s{n}p
observation_ports = {', '.join(sc.observation_ports)}
vr = rlc r=10e-3 l=10e-9
vr_port = {sc.vr_port}
die = rlc r=2e-3 c=150e-9
capacitor_list = caps.txt

[target]
curve = target.txt

[weights]
{w_lines}

[ga]
seed = 7
{g_lines}

[transient]
rise_time = 10e-9

[output]
dir = out
""")
    return out / "run.cfg"


def large_board(n_sites: int = 300, grid: FrequencyGrid | None = None,
                seed: int = 7) -> NetworkModel:
    """Large port-count variant: `n_sites` capacitor ports spread over a
    chain of plane regions, one load port and one VR port (n_sites + 2)."""
    if grid is None:
        grid = log_grid()
    rng = np.random.default_rng(seed)
    n_regions = 6

    branches: list[Branch] = []
    ports: list[tuple[str, int]] = []

    die_node = 1
    region_nodes = list(range(2, 2 + n_regions))
    vr_node = 2 + n_regions
    next_node = vr_node + 1

    branches.append(Branch(die_node, region_nodes[0], r=0.2e-3, l=0.12e-9))
    for a, b in zip(region_nodes, region_nodes[1:]):
        branches.append(Branch(a, b, r=0.25e-3, l=0.4e-9))
    for node in region_nodes:
        branches.append(Branch(node, 0, r=0.5e-3, c=150e-9))
    branches.append(Branch(region_nodes[-1], vr_node, r=0.3e-3, l=1.5e-9))

    ports.append(("U1", die_node))
    ports.append(("VR1", vr_node))
    for i in range(n_sites):
        region = region_nodes[i % n_regions]
        node = next_node
        next_node += 1
        branches.append(Branch(region, node,
                               r=float(rng.uniform(0.15e-3, 1.0e-3)),
                               l=float(rng.uniform(0.12e-9, 2.5e-9))))
        ports.append((f"C{i + 1}", node))
    return circuit_model(branches, ports, grid)
