"""Target-curve interpolation, band areas, violations, flatness, and the
weighted normalized score."""

import numpy as np
import pytest

from pdnopt.scoring import (
    ScoreWeights,
    TargetImpedanceCurve,
    area_scores,
    combined_score,
    flatness_deviation,
    flatness_q,
    load_target_curve,
    max_violation,
    normalize_baseline,
    target_at,
)

FLAT = TargetImpedanceCurve(np.array([1e3, 1e6]), np.array([1e-3, 1e-3]))


def test_target_flat_segment():
    assert target_at(FLAT, 1e5) == pytest.approx(1e-3, rel=1e-12)


def test_target_geometric_midpoint():
    """Log-log line between (1 MHz, 1 mOhm) and (100 MHz, 10 mOhm) passes
    through sqrt(10) mOhm at 10 MHz."""
    curve = TargetImpedanceCurve(np.array([1e6, 1e8]), np.array([1e-3, 1e-2]))
    assert target_at(curve, 1e7) == pytest.approx(np.sqrt(10) * 1e-3, rel=1e-12)


def test_target_exact_at_defining_pairs():
    curve = TargetImpedanceCurve(np.array([1e3, 3e7, 1e8]),
                                 np.array([650e-6, 650e-6, 3e-3]))
    for f, z in zip(curve.frequencies, curve.impedances):
        assert target_at(curve, f) == pytest.approx(z, rel=1e-12)


def test_target_outside_span_errors():
    with pytest.raises(ValueError, match="span"):
        target_at(FLAT, 1e7)


def test_target_needs_two_points():
    with pytest.raises(ValueError):
        TargetImpedanceCurve(np.array([1e3]), np.array([1e-3]))


def test_load_target_curve(tmp_path):
    path = tmp_path / "target.txt"
    path.write_text("# comment\n1e3 650e-6\n3e7 650e-6  # knee\n1e8 3e-3\n")
    curve = load_target_curve(path)
    assert curve.frequencies.tolist() == [1e3, 3e7, 1e8]
    assert curve.impedances[2] == 3e-3


def test_area_constant_gap():
    """|Z| = 2 mOhm over a 1 mOhm target across exactly two decades gives
    area_above = 2e-3 ohm*decade and no area below."""
    f = np.logspace(3, 6, 91)
    z = np.full(f.size, 2e-3)
    above, below = area_scores(f, z, FLAT)
    assert above == pytest.approx(1e-3 * 3, rel=1e-9)  # 1 mOhm gap, 3 decades
    assert below == 0.0
    # restrict to exactly two decades via the curve
    curve2 = TargetImpedanceCurve(np.array([1e3, 1e5]), np.array([1e-3, 1e-3]))
    above2, _ = area_scores(f, z, curve2)
    assert above2 == pytest.approx(2e-3, rel=1e-9)


def test_area_equal_curves_zero():
    f = np.logspace(3, 6, 61)
    z = np.asarray(target_at(FLAT, f))
    above, below = area_scores(f, z, FLAT)
    assert above == pytest.approx(0.0, abs=1e-15)
    assert below == pytest.approx(0.0, abs=1e-15)


def test_area_single_crossing_closed_form():
    """|Z| = 1 mOhm * (f/31.6 kHz) in log-log crosses the flat 1 mOhm target
    at 31.6 kHz; both areas integrate to the closed-form triangles."""
    curve = TargetImpedanceCurve(np.array([1e3, 1e6]), np.array([1e-3, 1e-3]))
    f = np.logspace(3, 6, 301)
    x = np.log10(f)
    z = 1e-3 * 10.0 ** (x - 4.5)  # log-linear crossing at 10^4.5
    above, below = area_scores(f, z, curve)
    # closed form: int of 1e-3 (10^u - 1) du over u in [0, 1.5] and mirrored
    up = 1e-3 * ((10 ** 1.5 - 1) / np.log(10) - 1.5)
    dn = 1e-3 * (1.5 - (1 - 10 ** -1.5) / np.log(10))
    assert above == pytest.approx(up, rel=0.005)
    assert below == pytest.approx(dn, rel=0.005)


def test_area_decomposition_identity():
    """area_above + area_below equals the integral of |gap| exactly."""
    rng = np.random.default_rng(8)
    f = np.logspace(3, 6, 121)
    z = 1e-3 * np.exp(rng.normal(scale=0.5, size=f.size))
    above, below = area_scores(f, z, FLAT)
    fs = f
    t = np.asarray(target_at(FLAT, fs))
    # same sampling as band_samples: grid plus knots (all grid points here)
    total = np.trapezoid(np.abs(z - t), np.log10(fs))
    assert above + below == pytest.approx(total, abs=1e-12)


def test_max_violation_cases():
    f = np.logspace(3, 6, 61)
    assert max_violation(f, np.full(f.size, 0.5e-3), FLAT) == 0.0
    z = np.full(f.size, 0.5e-3)
    z[30] = 1e-3 + 5e-3
    assert max_violation(f, z, FLAT) == pytest.approx(5e-3, rel=1e-9)
    z[40] = 1e-3 + 2e-3
    assert max_violation(f, z, FLAT) == pytest.approx(5e-3, rel=1e-9)


def test_flatness_constant_zero():
    f = np.logspace(3, 6, 61)
    assert flatness_deviation(f, np.full(f.size, 3e-3), FLAT) == \
        pytest.approx(0.0, abs=1e-18)


def test_flatness_alternating_delta():
    """|Z| alternating +/- delta around its mean reads as delta."""
    f = np.logspace(3, 6, 121)
    delta = 2e-4
    z = 1e-3 + delta * (-1.0) ** np.arange(f.size)
    dev = flatness_deviation(f, z, FLAT)
    assert dev == pytest.approx(delta, rel=1e-6)


def test_flatness_dense_grid_oracle():
    """A resonant hump scores within 2% of the same formula on a 10x grid."""
    def hump(f):
        w = 2 * np.pi * f
        y = 1 / 10.0 + 1 / (1j * w * 1e-6) + 1j * w * 2.5e-10
        return np.abs(1 / y) + 1e-3

    f1 = np.logspace(3, 6, 91)
    f10 = np.logspace(3, 6, 901)
    a = flatness_deviation(f1, hump(f1), FLAT)
    b = flatness_deviation(f10, hump(f10), FLAT)
    assert a == pytest.approx(b, rel=0.02)


def test_flatness_q_monotone_zero():
    f = np.logspace(3, 6, 61)
    assert flatness_q(f, np.linspace(1, 2, 61), FLAT) == 0.0


def test_flatness_q_sums_extrema():
    """A Q = 10 peak plus its flanking valley total their individual Qs."""
    f = np.logspace(6, 10, 241)
    w = 2 * np.pi * f
    y = 1 / 10.0 + 1 / (1j * w * 1e-9) + 1j * w * 1e-9
    mag = np.abs(1 / y)
    total = flatness_q(f, mag)
    assert total == pytest.approx(10.0, rel=0.05)


def test_weights_validation():
    with pytest.raises(ValueError):
        ScoreWeights(area_above=0.0)
    with pytest.raises(ValueError):
        ScoreWeights(area_above=-1.0)


def test_combined_score_baseline_is_weight_sum():
    """A candidate identical to the baseline totals the active weight sum."""
    raw = {"area_above": 0.2, "max_violation": 3e-3, "flatness_q": 12.0}
    w = ScoreWeights(area_above=1.0, max_violation=2.0, flatness_q=0.5)
    base = normalize_baseline(raw, w)
    bd = combined_score(raw, base, w)
    assert bd.total == pytest.approx(3.5, rel=1e-12)
    assert all(v == pytest.approx(1.0) for v in bd.normalized.values())


def test_combined_score_linearity():
    """Halving every raw criterion halves the total (no credit weight)."""
    raw = {"area_above": 0.2, "flatness_dev": 4e-3}
    w = ScoreWeights(area_above=1.0, flatness_dev=1.0)
    base = normalize_baseline(raw, w)
    half = {k: v / 2 for k, v in raw.items()}
    assert combined_score(half, base, w).total == pytest.approx(
        combined_score(raw, base, w).total / 2, rel=1e-12)


def test_combined_score_hand_computed():
    """Three criteria with distinct weights match the formula by hand."""
    raw_base = {"area_above": 0.4, "area_below": 0.1, "max_violation": 2e-3}
    w = ScoreWeights(area_above=2.0, area_below_credit=0.5, max_violation=1.0)
    base = normalize_baseline(raw_base, w)
    raw = {"area_above": 0.2, "area_below": 0.3, "max_violation": 3e-3}
    bd = combined_score(raw, base, w)
    expected = 2.0 * (0.2 / 0.4) + 1.0 * (3e-3 / 2e-3) - 0.5 * (0.3 / 0.1)
    assert bd.total == pytest.approx(expected, rel=1e-12)


def test_combined_score_missing_criterion():
    w = ScoreWeights(area_above=1.0, transient=1.0)
    base = {"area_above": 1.0, "transient": 1.0}
    with pytest.raises(KeyError):
        combined_score({"area_above": 0.5}, base, w)


def test_zero_baseline_warns_and_substitutes():
    raw = {"area_above": 0.0}
    w = ScoreWeights(area_above=1.0)
    with pytest.warns(UserWarning, match="zero"):
        base = normalize_baseline(raw, w)
    assert base["area_above"] > 0


def test_scale_equivariance():
    """Scaling |Z| and the target together scales areas and violations but
    leaves the Q-sum criterion unchanged."""
    rng = np.random.default_rng(5)
    f = np.logspace(4, 8, 121)
    w = 2 * np.pi * f
    y = 1 / 8.0 + 1 / (1j * w * 1e-7) + 1j * w * 3e-10
    z = np.abs(1 / y) + 5e-4
    curve = TargetImpedanceCurve(np.array([1e4, 1e8]), np.array([2e-3, 2e-3]))
    alpha = 7.5
    curve_s = TargetImpedanceCurve(curve.frequencies, alpha * curve.impedances)
    a1, b1 = area_scores(f, z, curve)
    a2, b2 = area_scores(f, alpha * z, curve_s)
    assert a2 == pytest.approx(alpha * a1, rel=1e-12)
    assert b2 == pytest.approx(alpha * b1, rel=1e-12)
    assert max_violation(f, alpha * z, curve_s) == \
        pytest.approx(alpha * max_violation(f, z, curve), rel=1e-12)
    assert flatness_q(f, alpha * z, curve_s) == \
        pytest.approx(flatness_q(f, z, curve), rel=1e-12)


def test_argmin_invariance_under_baseline_rescale():
    """Rescaling all baselines by one factor never swaps two candidates."""
    w = ScoreWeights(area_above=1.0, max_violation=1.0)
    base = {"area_above": 0.4, "max_violation": 1e-3}
    base2 = {k: 3.0 * v for k, v in base.items()}
    cand_a = {"area_above": 0.3, "max_violation": 2e-3}
    cand_b = {"area_above": 0.5, "max_violation": 0.5e-3}
    order1 = combined_score(cand_a, base, w).total < \
        combined_score(cand_b, base, w).total
    order2 = combined_score(cand_a, base2, w).total < \
        combined_score(cand_b, base2, w).total
    assert order1 == order2
