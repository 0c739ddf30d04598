"""Integer-constrained genetic algorithm over capacitor-type quantities,
the SRF-voting initial guess, SRF-to-inductance assignment, and the
attach-and-score evaluation loop."""

from __future__ import annotations

import math
import multiprocessing
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import CapacitorCatalog, PortInductanceReport, loop_inductance
from .network import ShuntElementModel, align_grid, attach_shunt, merge_ports, \
    shunt_across_port, _terminate_ports, _reflection
from .scoring import ScoreBreakdown, ScoreWeights, TargetImpedanceCurve, \
    area_scores, combined_score, flatness_deviation, flatness_q, max_violation, \
    normalize_baseline
from .touchstone import ConversionError, NetworkModel, renormalize
from .transient import HorizonError, VectorFitError, apply_vr_loadline, \
    extend_to_dc, reverse_pulse, step_response, vector_fit

__all__ = [
    "GAConfig",
    "Assignment",
    "GenerationStats",
    "EvaluationContext",
    "OptimizeResult",
    "prepare_context",
    "initial_guess",
    "assign_ports",
    "attach_and_score",
    "score_breakdown",
    "observed_impedance",
    "optimize",
    "load_capacitor_list",
]

ATTACH_ORDERS = ("high_srf_to_low_L", "high_srf_to_high_L")


@dataclass(frozen=True)
class GAConfig:
    """GA tuning; the class-method defaults follow the published constants
    (generations min(10*T, 100), population min(max(10*T, 40), 100),
    crossover 0.75, elites max(floor(0.2*T), 2), tolerance 1e-3)."""

    max_generations: int
    population_size: int
    crossover_fraction: float = 0.75
    elite_count: int = 2
    function_tolerance: float = 1e-3
    stall_generations: int = 15
    rng_seed: int = 0
    attach_order: str = "high_srf_to_low_L"

    def __post_init__(self):
        if not 0 < self.crossover_fraction < 1:
            raise ValueError("crossover_fraction must be in (0, 1)")
        if self.elite_count < 1 or self.elite_count >= self.population_size:
            raise ValueError("need 1 <= elite_count < population_size")
        if self.function_tolerance <= 0:
            raise ValueError("function_tolerance must be positive")
        if self.attach_order not in ATTACH_ORDERS:
            raise ValueError(f"attach_order must be one of {ATTACH_ORDERS}")

    @classmethod
    def defaults(cls, n_types: int, rng_seed: int = 0, **overrides) -> "GAConfig":
        cfg = cls(
            max_generations=min(10 * n_types, 100),
            population_size=min(max(10 * n_types, 40), 100),
            crossover_fraction=0.75,
            elite_count=max(math.floor(n_types * 0.2), 2),
            function_tolerance=1e-3,
            rng_seed=rng_seed,
        )
        return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class Assignment:
    """Port-to-capacitor pairing plus the ports deliberately left empty."""

    pairs: tuple[tuple[str, str], ...]
    unpopulated_ports: tuple[str, ...]

    def __post_init__(self):
        ports = [p for p, _ in self.pairs] + list(self.unpopulated_ports)
        if len(set(ports)) != len(ports):
            raise ValueError("a port may appear at most once in an assignment")

    def to_text(self) -> str:
        lines = [f"{port}\t{cap}" for port, cap in self.pairs]
        lines.append("UNPOPULATED")
        lines.extend(self.unpopulated_ports)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Assignment":
        pairs, unpop = [], []
        in_unpop = False
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == "UNPOPULATED":
                in_unpop = True
                continue
            if in_unpop:
                unpop.append(line)
            else:
                parts = line.split("\t") if "\t" in line else line.split()
                if len(parts) != 2:
                    raise ValueError(f"bad assignment line {raw!r}")
                pairs.append((parts[0], parts[1]))
        return cls(tuple(pairs), tuple(unpop))


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_score: float
    mean_score: float
    best_counts: tuple[int, ...]


@dataclass(frozen=True)
class EvaluationContext:
    """Prepared models and baseline for scoring candidate quantity vectors.

    `base` holds the board with die/VR folded in and the load pins merged,
    renormalized to a low reference impedance; candidate ports stay open
    until a candidate is attached.
    """

    base: NetworkModel
    observation_label: str
    candidate_ports: tuple[str, ...]
    catalog: CapacitorCatalog
    cap_gammas: np.ndarray  # (n_freq, n_types) at base.ref_impedance
    inductance: PortInductanceReport
    curve: TargetImpedanceCurve
    weights: ScoreWeights
    attach_order: str = "high_srf_to_low_L"
    rise_time: float = 10e-9
    min_poles: int = 10
    max_poles: int = 50
    freq_weighting: str = "log"
    baseline_counts: tuple[int, ...] = ()
    baseline_raw: dict = field(default_factory=dict)
    baseline_norm: dict = field(default_factory=dict)

    @property
    def n_types(self) -> int:
        return len(self.catalog)

    @property
    def n_ports(self) -> int:
        return len(self.candidate_ports)

    @property
    def penalty_score(self) -> float:
        w = self.weights
        total = sum(w.weight_for(c) for c in w.active)
        return 1e6 * total


def load_capacitor_list(path) -> list[str]:
    """Model filenames from a candidate-list text file ('#' comments)."""
    names = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                names.append(line)
    if not names:
        raise ValueError(f"no capacitor models listed in {path}")
    return names


def initial_guess(catalog: CapacitorCatalog, curve: TargetImpedanceCurve,
                  n_ports: int, steps_per_decade: int = 100) -> np.ndarray:
    """Vote along the target curve: each log-spaced frequency step scores a
    point for the capacitor whose SRF is log-nearest; sites are then split
    proportionally to the votes (largest-remainder rounding)."""
    if n_ports < 1:
        raise ValueError("need at least one capacitor site")
    decades = np.log10(curve.f_max / curve.f_min)
    n_steps = max(int(np.ceil(decades * steps_per_decade)) + 1, 2)
    walk = np.linspace(np.log10(curve.f_min), np.log10(curve.f_max), n_steps)
    log_srf = np.log10(np.array([e.srf for e in catalog.entries]))
    nearest = np.argmin(np.abs(walk[:, None] - log_srf[None, :]), axis=1)
    votes = np.bincount(nearest, minlength=len(catalog)).astype(float)
    if votes.sum() == 0:
        votes[:] = 1.0
    share = votes / votes.sum() * n_ports
    counts = np.floor(share).astype(int)
    remainder = share - counts
    short = n_ports - counts.sum()
    for i in np.argsort(-remainder, kind="stable")[:short]:
        counts[i] += 1
    return counts


def assign_ports(q, catalog: CapacitorCatalog,
                 inductance: PortInductanceReport,
                 order: str = "high_srf_to_low_L") -> Assignment:
    """Pair capacitor instances (sorted by SRF descending) with ports sorted
    by loop inductance; the default sends high-SRF parts to low-inductance
    ports.  Leftover ports are reported unpopulated."""
    if order not in ATTACH_ORDERS:
        raise ValueError(f"attach order must be one of {ATTACH_ORDERS}")
    q = np.asarray(q, dtype=int)
    if q.size != len(catalog) or np.any(q < 0):
        raise ValueError("quantity vector must be nonnegative, one per type")
    ports = inductance.labels()
    if order == "high_srf_to_high_L":
        ports = ports[::-1]
    total = int(q.sum())
    if total > len(ports):
        raise ValueError(f"{total} capacitors exceed {len(ports)} ports")
    type_order = sorted(range(len(catalog)),
                        key=lambda i: (-catalog[i].srf, i))
    instances = []
    for i in type_order:
        instances.extend([catalog[i].name] * int(q[i]))
    pairs = tuple(zip(ports[:total], instances))
    return Assignment(pairs, tuple(sorted(ports[total:])))


def observed_impedance(q, context: EvaluationContext) -> np.ndarray:
    """Complex Z(f) at the observation port with the candidate attached;
    unpopulated candidate ports are true opens."""
    assignment = assign_ports(q, context.catalog, context.inductance,
                              context.attach_order)
    return _observed_for_assignment(assignment, context)


def _observed_for_assignment(assignment: Assignment,
                             context: EvaluationContext) -> np.ndarray:
    base = context.base
    n_f = len(base.grid)
    by_name = {e.name: i for i, e in enumerate(context.catalog.entries)}
    term_idx = []
    gcols = []
    open_gamma = np.ones(n_f, dtype=complex)
    for port in context.candidate_ports:
        term_idx.append(base.port_index(port))
        gcols.append(open_gamma)
    port_pos = {p: k for k, p in enumerate(context.candidate_ports)}
    for port, cap in assignment.pairs:
        if port not in port_pos:
            raise KeyError(f"unknown candidate port {port!r}")
        if cap not in by_name:
            raise KeyError(f"unknown capacitor {cap!r}")
        gcols[port_pos[port]] = context.cap_gammas[:, by_name[cap]]
    gammas = np.stack(gcols, axis=1)
    reduced = _terminate_ports(base.data, np.asarray(term_idx), gammas, base.grid)
    keep = [l for l in base.port_labels if l not in port_pos]
    o = keep.index(context.observation_label)
    s_oo = reduced[:, o, o]
    z0 = base.ref_impedance
    return z0 * (1.0 + s_oo) / (1.0 - s_oo)


def _raw_criteria(z_obs: np.ndarray, context: EvaluationContext) -> dict:
    f = context.base.grid.points
    zmag = np.abs(z_obs)
    above, below = area_scores(f, zmag, context.curve, context.freq_weighting)
    raw = {
        "area_above": above,
        "area_below": below,
        "max_violation": max_violation(f, zmag, context.curve),
        "flatness_dev": flatness_deviation(f, zmag, context.curve,
                                           context.freq_weighting),
        "flatness_q": flatness_q(f, zmag, context.curve),
    }
    if context.weights.transient > 0:
        f_fit, z_fit = extend_to_dc(f, z_obs)
        pos = f_fit > 0
        model = vector_fit(f_fit[pos], z_fit[pos],
                           context.min_poles, context.max_poles)
        sr = step_response(model, context.rise_time)
        raw["transient"] = reverse_pulse(sr).vpp_per_amp
    return raw


def evaluate_raw(q, context: EvaluationContext) -> dict:
    return _raw_criteria(observed_impedance(q, context), context)


def attach_and_score(q, context: EvaluationContext) -> float:
    """Assign, attach, observe and score one quantity vector; failures map to
    a large penalty instead of aborting the run."""
    try:
        raw = evaluate_raw(q, context)
    except (VectorFitError, HorizonError, ConversionError,
            np.linalg.LinAlgError) as exc:
        warnings.warn(f"candidate {tuple(int(x) for x in q)} penalized: {exc}",
                      stacklevel=2)
        return context.penalty_score
    return combined_score(raw, context.baseline_norm, context.weights).total


def score_breakdown(q, context: EvaluationContext) -> ScoreBreakdown:
    return combined_score(evaluate_raw(q, context), context.baseline_norm,
                          context.weights)


def score_assignment(assignment: Assignment,
                     context: EvaluationContext) -> ScoreBreakdown:
    """Score an explicit port-to-capacitor assignment (manual what-if runs)."""
    z = _observed_for_assignment(assignment, context)
    return combined_score(_raw_criteria(z, context), context.baseline_norm,
                          context.weights)


def prepare_context(board: NetworkModel, observation_labels, catalog,
                    curve: TargetImpedanceCurve, weights: ScoreWeights,
                    die: ShuntElementModel | None = None,
                    die_port: str | None = None,
                    vr: ShuntElementModel | None = None,
                    vr_port: str | None = None,
                    vr_droop: float = 0.0,
                    rise_time: float = 10e-9,
                    min_poles: int = 10,
                    max_poles: int = 50,
                    freq_weighting: str = "log",
                    attach_order: str = "high_srf_to_low_L",
                    working_z0: float = 0.1) -> EvaluationContext:
    """Fold die/VR models into the board, merge the load pins into one
    observation port, precompute per-type reflections and the loop-inductance
    report, and score the voting-heuristic baseline."""
    observation_labels = list(observation_labels)
    if not observation_labels:
        raise ValueError("need at least one observation port label")
    base = renormalize(board, working_z0) if board.kind == "S" else \
        renormalize(_to_s(board), working_z0)

    if vr is not None:
        vr = apply_vr_loadline(vr, vr_droop)
        if vr_port is not None:
            base = attach_shunt(base, base.port_index(vr_port), vr)

    obs = observation_labels[0]
    if len(observation_labels) > 1:
        base = merge_ports(base, observation_labels, obs)

    if die is not None:
        if die_port is not None:
            base = attach_shunt(base, base.port_index(die_port), die)
        else:
            base = shunt_across_port(base, obs, die)
    if vr is not None and vr_port is None:
        base = shunt_across_port(base, obs, vr)

    candidate_ports = tuple(l for l in base.port_labels if l != obs)
    if not candidate_ports:
        raise ValueError("board has no candidate capacitor ports")

    report = loop_inductance(base, obs, candidate_ports)
    if report.failures:
        bad = ", ".join(l for l, _ in report.failures)
        raise ValueError(f"loop inductance extraction failed for ports: {bad}")

    gammas = np.empty((len(base.grid), len(catalog)), dtype=complex)
    for t, entry in enumerate(catalog.entries):
        aligned = align_grid(entry.model, base.grid)
        gammas[:, t] = _reflection(aligned.z_shunt, base.ref_impedance)

    max_poles_eff = min(max_poles, len(base.grid) // 2)
    if weights.transient > 0 and max_poles_eff < min_poles:
        raise ValueError(
            f"{len(base.grid)} frequency points cannot support min_poles="
            f"{min_poles}; refine the sweep")

    ctx = EvaluationContext(
        base=base, observation_label=obs, candidate_ports=candidate_ports,
        catalog=catalog, cap_gammas=gammas, inductance=report, curve=curve,
        weights=weights, attach_order=attach_order, rise_time=rise_time,
        min_poles=min_poles, max_poles=max_poles_eff,
        freq_weighting=freq_weighting,
    )
    q0 = initial_guess(catalog, curve, len(candidate_ports))
    baseline_raw = evaluate_raw(q0, ctx)
    baseline_norm = normalize_baseline(baseline_raw, weights)
    return replace(ctx, baseline_counts=tuple(int(x) for x in q0),
                   baseline_raw=baseline_raw, baseline_norm=baseline_norm)


def _to_s(model: NetworkModel) -> NetworkModel:
    from .touchstone import y_to_s, z_to_s
    if model.kind == "Z":
        return z_to_s(model)
    return y_to_s(model)


def _repair(q: np.ndarray, n_ports: int) -> np.ndarray:
    while q.sum() > n_ports:
        q[int(np.argmax(q))] -= 1
    return q


def _random_feasible(rng: np.random.Generator, n_types: int,
                     n_ports: int) -> np.ndarray:
    """Uniform total in [0, n_ports], spread over types by a random mix, so
    the initial population covers sparse and dense populations alike."""
    total = int(rng.integers(0, n_ports + 1))
    mix = rng.dirichlet(np.ones(n_types))
    return rng.multinomial(total, mix).astype(int)


# Shared context for forked evaluation workers.
_PAR_CTX: EvaluationContext | None = None


def _worker_score(q_tuple) -> float:
    return attach_and_score(np.asarray(q_tuple, dtype=int), _PAR_CTX)


def _score_population(pop: np.ndarray, context: EvaluationContext,
                      memo: dict, pool) -> np.ndarray:
    keys = [tuple(int(x) for x in q) for q in pop]
    missing = []
    for k in keys:
        if k not in memo and k not in missing:
            missing.append(k)
    if missing:
        if pool is not None:
            results = pool.map(_worker_score, missing)
        else:
            results = [attach_and_score(np.asarray(k, dtype=int), context)
                       for k in missing]
        for k, s in zip(missing, results):
            memo[k] = float(s)
    return np.array([memo[k] for k in keys])


@dataclass(frozen=True)
class OptimizeResult:
    best_counts: tuple[int, ...]
    assignment: Assignment
    breakdown: ScoreBreakdown
    log: tuple[GenerationStats, ...]


def optimize(context: EvaluationContext, config: GAConfig,
             jobs: int = 1, progress=None) -> OptimizeResult:
    """Run the integer GA: tournament selection (size 2), uniform crossover
    on the configured fraction of non-elite offspring, per-gene reset
    mutation at rate 1/n_types, repair by decrementing the largest counts,
    and elitism.  Fully reproducible from the seed; population scoring may
    fan out over `jobs` forked workers without changing the result."""
    rng = np.random.default_rng(config.rng_seed)
    n_types, n_ports = context.n_types, context.n_ports
    pop_size = config.population_size

    pop = np.empty((pop_size, n_types), dtype=int)
    pop[0] = np.asarray(context.baseline_counts, dtype=int)
    for i in range(1, pop_size):
        pop[i] = _random_feasible(rng, n_types, n_ports)

    memo: dict[tuple, float] = {}
    pool = None
    if jobs > 1:
        global _PAR_CTX
        _PAR_CTX = context
        try:
            pool = multiprocessing.get_context("fork").Pool(jobs)
        except (ValueError, OSError):
            pool = None

    log: list[GenerationStats] = []
    try:
        for gen in range(config.max_generations):
            scores = _score_population(pop, context, memo, pool)
            order = np.argsort(scores, kind="stable")
            best_idx = int(order[0])
            stats = GenerationStats(
                generation=gen,
                best_score=float(scores[best_idx]),
                mean_score=float(scores.mean()),
                best_counts=tuple(int(x) for x in pop[best_idx]),
            )
            log.append(stats)
            if progress is not None:
                progress(stats)

            if _stalled(log, config):
                break
            if gen == config.max_generations - 1:
                break

            elites = pop[order[:config.elite_count]].copy()
            n_children = pop_size - config.elite_count
            n_xover = int(round(config.crossover_fraction * n_children))
            children = np.empty((n_children, n_types), dtype=int)
            for c in range(n_children):
                if c < n_xover:
                    p1 = _tournament(rng, scores)
                    p2 = _tournament(rng, scores)
                    mask = rng.random(n_types) < 0.5
                    child = np.where(mask, pop[p1], pop[p2])
                else:
                    child = pop[_tournament(rng, scores)].copy()
                    mask = rng.random(n_types) < (1.0 / n_types)
                    if np.any(mask):
                        child[mask] = rng.integers(0, n_ports + 1,
                                                   size=int(mask.sum()))
                children[c] = _repair(child, n_ports)
            pop = np.vstack([elites, children])
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    best_key = min(memo, key=lambda k: (memo[k], k))
    best = np.asarray(best_key, dtype=int)
    assignment = assign_ports(best, context.catalog, context.inductance,
                              context.attach_order)
    breakdown = score_breakdown(best, context)
    return OptimizeResult(tuple(int(x) for x in best), assignment,
                          breakdown, tuple(log))


def _tournament(rng: np.random.Generator, scores: np.ndarray) -> int:
    i, j = rng.integers(0, scores.size, size=2)
    return int(i if scores[i] <= scores[j] else j)


def _stalled(log: list[GenerationStats], config: GAConfig) -> bool:
    w = config.stall_generations
    if len(log) <= w:
        return False
    old = log[-w - 1].best_score
    new = log[-1].best_score
    return (old - new) <= config.function_tolerance * max(abs(old), 1e-300)


def convergence_csv(log) -> str:
    if not log:
        return "generation,best_score,mean_score,best_counts\n"
    lines = ["generation,best_score,mean_score,best_counts"]
    for st in log:
        counts = ";".join(str(c) for c in st.best_counts)
        lines.append(f"{st.generation},{st.best_score!r},{st.mean_score!r},{counts}")
    return "\n".join(lines) + "\n"
