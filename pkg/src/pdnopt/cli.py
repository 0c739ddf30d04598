"""Command-line front-end: analyze a board, optimize its capacitor
population, or score a hand-edited assignment.

Configuration is a sectioned key = value text file; see README for the full
key reference.  Exit codes: 0 success, 2 configuration error, 3 model error,
4 optimization failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from . import optimizer as opt
from .analysis import build_catalog
from .network import LumpedRLC, lumped_to_shunt, reduce_capacitor_to_shunt
from .optimizer import Assignment, GAConfig, prepare_context
from .scoring import ScoreWeights, load_target_curve, target_at
from .touchstone import TouchstoneError, read_touchstone
from .transient import export_pwl, reverse_pulse, step_response, vector_fit, \
    extend_to_dc

MAX_MODEL_BYTES = 1_000_000_000

EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_OPTIM = 4


class ConfigError(Exception):
    pass


class ModelError(Exception):
    pass


def _get(cfg, section: str, key: str, default=None, required: bool = False):
    if cfg.has_option(section, key):
        val = cfg.get(section, key).strip()
        if val:
            return val
    if required:
        raise ConfigError(f"missing required config key [{section}] {key}")
    return default


def _parse_rlc(text: str) -> LumpedRLC:
    """'rlc r=10e-3 l=10e-9 [c=...]' -> LumpedRLC"""
    parts = text.split()
    if not parts or parts[0].lower() != "rlc":
        raise ConfigError(f"expected 'rlc r=... l=... c=...', got {text!r}")
    vals = {"r": 0.0, "l": 0.0, "c": 0.0}
    for p in parts[1:]:
        if "=" not in p:
            raise ConfigError(f"bad rlc term {p!r}")
        k, v = p.split("=", 1)
        if k.lower() not in vals:
            raise ConfigError(f"unknown rlc element {k!r}")
        vals[k.lower()] = float(v)
    topo = "series-RLC-shunt" if vals["c"] > 0 else "series-RL-shunt"
    return LumpedRLC(vals["r"], vals["l"], vals["c"], topo)


def _load_shunt(spec: str, base_dir: Path, grid, label: str):
    """A die/VR entry is either an inline RLC or a Touchstone path."""
    if spec.lower().startswith("rlc"):
        return lumped_to_shunt(_parse_rlc(spec), grid, label)
    path = base_dir / spec
    if not path.exists():
        raise ConfigError(f"model file not found: {path}")
    model = read_touchstone(path)
    return reduce_capacitor_to_shunt(model, mode="z11", label=label)


def _load_board(cfg, base_dir: Path):
    path_str = _get(cfg, "model", "pdn", required=True)
    path = base_dir / path_str
    if not path.exists():
        raise ConfigError(f"PDN model file not found: {path}")
    if os.path.getsize(path) > MAX_MODEL_BYTES:
        raise ModelError(
            f"{path} exceeds 1 GB; thin the frequency sweep before optimizing")
    try:
        return read_touchstone(path)
    except TouchstoneError as exc:
        raise ModelError(f"{path}: {exc}") from exc


def _load_catalog(cfg, base_dir: Path, grid):
    list_path = base_dir / _get(cfg, "model", "capacitor_list", required=True)
    if not list_path.exists():
        raise ConfigError(f"capacitor list not found: {list_path}")
    mode = _get(cfg, "model", "cap_model_mode", default="shunt_thru")
    named = []
    for entry in opt.load_capacitor_list(list_path):
        cap_path = list_path.parent / entry
        if not cap_path.exists():
            raise ConfigError(f"capacitor model not found: {cap_path}")
        try:
            model = read_touchstone(cap_path)
        except TouchstoneError as exc:
            raise ModelError(f"{cap_path}: {exc}") from exc
        shunt = reduce_capacitor_to_shunt(model, mode=mode, label=cap_path.stem)
        named.append((cap_path.stem, shunt))
    return build_catalog(named, srf_fallback="edge")


def _load_weights(cfg) -> ScoreWeights:
    def w(key):
        return float(_get(cfg, "weights", key, default="0") or 0.0)

    try:
        return ScoreWeights(
            area_above=w("area_above"),
            area_below_credit=w("area_below_credit"),
            max_violation=w("max_violation"),
            flatness_dev=w("flatness_dev"),
            flatness_q=w("flatness_q"),
            transient=w("transient"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_context(cfg, base_dir: Path, need_target: bool = True):
    board = _load_board(cfg, base_dir)
    catalog = _load_catalog(cfg, base_dir, board.grid)
    obs = [s.strip() for s in
           _get(cfg, "model", "observation_ports", required=True).split(",")
           if s.strip()]
    for label in obs:
        if label not in board.port_labels:
            raise ConfigError(f"observation port {label!r} not in the model")

    die = vr = None
    die_spec = _get(cfg, "model", "die")
    if die_spec:
        die = _load_shunt(die_spec, base_dir, board.grid, "die")
    vr_spec = _get(cfg, "model", "vr")
    if vr_spec:
        vr = _load_shunt(vr_spec, base_dir, board.grid, "vr")
    die_port = _get(cfg, "model", "die_port")
    vr_port = _get(cfg, "model", "vr_port")
    vr_droop = float(_get(cfg, "model", "vr_droop", default="0") or 0.0)

    if need_target:
        curve_path = base_dir / _get(cfg, "target", "curve", required=True)
        if not curve_path.exists():
            raise ConfigError(f"target curve not found: {curve_path}")
        curve = load_target_curve(curve_path)
        weights = _load_weights(cfg)
    else:
        # Loop-inductance / SRF analysis does not need a target; use a
        # placeholder band covering the model grid.
        f = board.grid.points
        f_pos = f[f > 0]
        from .scoring import TargetImpedanceCurve
        curve = TargetImpedanceCurve(np.array([f_pos[0], f_pos[-1]]),
                                     np.array([1.0, 1.0]))
        weights = ScoreWeights(area_above=1.0)

    try:
        return prepare_context(
            board, obs, catalog, curve, weights,
            die=die, die_port=die_port, vr=vr, vr_port=vr_port,
            vr_droop=vr_droop,
            rise_time=float(_get(cfg, "transient", "rise_time",
                                 default="10e-9") or 10e-9),
            min_poles=int(_get(cfg, "transient", "min_poles", default="10")),
            max_poles=int(_get(cfg, "transient", "max_poles", default="50")),
            freq_weighting=_get(cfg, "scoring", "freq_weighting", default="log"),
            attach_order=_get(cfg, "ga", "attach_order",
                              default="high_srf_to_low_L"),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _ga_config(cfg, context, seed_override) -> GAConfig:
    n_types = context.n_types
    seed = seed_override if seed_override is not None else \
        int(_get(cfg, "ga", "seed", default="0"))
    overrides = {}
    for key, cast in (("max_generations", int), ("population_size", int),
                      ("crossover_fraction", float), ("elite_count", int),
                      ("function_tolerance", float), ("stall_generations", int)):
        val = _get(cfg, "ga", key)
        if val is not None:
            overrides[key] = cast(val)
    overrides["attach_order"] = _get(cfg, "ga", "attach_order",
                                     default="high_srf_to_low_L")
    try:
        return GAConfig.defaults(n_types, rng_seed=seed, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _impedance_csv(f, z, curve) -> str:
    lines = ["freq_hz,z_ohms,target_ohms"]
    for fi, zi in zip(f, np.abs(z)):
        try:
            t = target_at(curve, float(fi))
        except ValueError:
            t = ""
        t_txt = repr(float(t)) if t != "" else ""
        lines.append(f"{float(fi)!r},{float(zi)!r},{t_txt}")
    return "\n".join(lines) + "\n"


def _transient_csv(sr) -> str:
    lines = ["time_s,volts"]
    for t, v in zip(sr.times, sr.voltage):
        lines.append(f"{float(t)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def _fit_observed(context, z_obs):
    f = context.base.grid.points
    f_fit, z_fit = extend_to_dc(f, z_obs)
    pos = f_fit > 0
    model = vector_fit(f_fit[pos], z_fit[pos], context.min_poles,
                       context.max_poles)
    return step_response(model, context.rise_time)


def cmd_analyze(cfg, base_dir: Path, out_dir: Path, args) -> int:
    context = _build_context(cfg, base_dir, need_target=False)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "inductance_report.txt").write_text(context.inductance.to_text())
    (out_dir / "srf_report.txt").write_text(context.catalog.to_text())
    print(f"wrote {out_dir / 'inductance_report.txt'}")
    print(f"wrote {out_dir / 'srf_report.txt'}")
    return 0


def cmd_optimize(cfg, base_dir: Path, out_dir: Path, args) -> int:
    context = _build_context(cfg, base_dir)
    ga = _ga_config(cfg, context, args.seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    def progress(st):
        print(f"generation {st.generation}: best {st.best_score!r} "
              f"mean {st.mean_score!r}")

    result = opt.optimize(context, ga, jobs=args.jobs, progress=progress)

    (out_dir / "assignment.txt").write_text(result.assignment.to_text())
    (out_dir / "score_breakdown.txt").write_text(result.breakdown.to_text())
    (out_dir / "convergence.csv").write_text(opt.convergence_csv(result.log))

    f = context.base.grid.points
    q0 = np.asarray(context.baseline_counts)
    z0 = opt.observed_impedance(q0, context)
    z1 = opt.observed_impedance(np.asarray(result.best_counts), context)
    (out_dir / "impedance_initial.csv").write_text(
        _impedance_csv(f, z0, context.curve))
    (out_dir / "impedance_optimized.csv").write_text(
        _impedance_csv(f, z1, context.curve))

    if context.weights.transient > 0:
        sr0 = _fit_observed(context, z0)
        sr1 = _fit_observed(context, z1)
        (out_dir / "transient_initial.csv").write_text(_transient_csv(sr0))
        (out_dir / "transient_optimized.csv").write_text(_transient_csv(sr1))
        wc = reverse_pulse(sr1)
        (out_dir / "worst_case_load.sp").write_text(export_pwl(wc))

    print(f"best counts: {result.best_counts}")
    print(f"total score: {result.breakdown.total!r}")
    print(f"outputs in {out_dir}")
    return 0


def cmd_score(cfg, base_dir: Path, out_dir: Path, args) -> int:
    context = _build_context(cfg, base_dir)
    path = Path(args.assignment)
    if not path.exists():
        raise ConfigError(f"assignment file not found: {path}")
    assignment = Assignment.from_text(path.read_text())
    try:
        breakdown = opt.score_assignment(assignment, context)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "score_breakdown.txt").write_text(breakdown.to_text())
    sys.stdout.write(breakdown.to_text())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pdnopt",
        description="Decoupling capacitor selection for PDN models")
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the GA seed from the config")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel candidate-scoring processes")
    parser.add_argument("--out", default=None, help="override the output dir")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", help="loop-inductance and SRF reports")
    sub.add_parser("optimize", help="run the capacitor optimization")
    p_score = sub.add_parser("score", help="score an existing assignment file")
    p_score.add_argument("assignment", help="assignment file to score")

    args = parser.parse_args(argv)
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        print(f"error: config file not found: {cfg_path}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cfg.read(cfg_path)
    except configparser.Error as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    base_dir = cfg_path.parent
    out_dir = Path(args.out) if args.out else \
        base_dir / (cfg.get("output", "dir", fallback="out"))

    handlers = {"analyze": cmd_analyze, "optimize": cmd_optimize,
                "score": cmd_score}
    try:
        return handlers[args.command](cfg, base_dir, out_dir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, TouchstoneError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except Exception as exc:  # optimization / numeric failures
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_OPTIM


if __name__ == "__main__":
    sys.exit(main())
