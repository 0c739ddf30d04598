"""Touchstone parsing/writing and S/Z/Y conversion identities."""

import numpy as np
import pytest

from pdnopt.touchstone import (
    FrequencyGrid,
    NetworkModel,
    TouchstoneError,
    ConversionError,
    parse_touchstone,
    read_touchstone,
    write_touchstone,
    s_to_z,
    z_to_s,
    s_to_y,
    y_to_s,
    z_to_y,
    y_to_z,
)

from oracle import OracleCircuit


def _random_passive_model(rng, n_ports, n_freq=40):
    """Random passive S-matrix: scaled unitary-bounded random matrices."""
    grid = FrequencyGrid(np.logspace(5, 9, n_freq))
    s = rng.normal(size=(n_freq, n_ports, n_ports)) \
        + 1j * rng.normal(size=(n_freq, n_ports, n_ports))
    # symmetrize (reciprocal) and shrink below unit norm
    s = 0.5 * (s + np.transpose(s, (0, 2, 1)))
    norms = np.linalg.norm(s, ord=2, axis=(1, 2))
    s = s / (2.5 * norms[:, None, None])
    return NetworkModel(grid, s, "S", 50.0)


def test_option_line_defaults_and_parsing():
    """'# GHz S MA R 50' decodes to the standard header fields."""
    text = "# GHz S MA R 50\n1 0.5 0\n"
    m = parse_touchstone(text, 1)
    assert m.kind == "S"
    assert m.ref_impedance == 50.0
    assert m.grid.points[0] == 1e9  # GHz scaled to Hz
    # MA: magnitude 0.5 angle 0
    assert m.data[0, 0, 0] == pytest.approx(0.5 + 0j)


def test_omitted_option_tokens_default():
    """Omitted tokens fall back to GHz / S / MA / 50."""
    m = parse_touchstone("#\n1 1 0\n", 1)
    assert m.kind == "S" and m.ref_impedance == 50.0
    assert m.grid.points[0] == 1e9


def test_one_port_ri_decode():
    """'1e6 0.5 0.0' under '# Hz S RI R 50' is S11(1 MHz) = 0.5 + 0j."""
    m = parse_touchstone("# Hz S RI R 50\n1e6 0.5 0.0\n", 1)
    assert m.grid.points[0] == 1e6
    assert m.data[0, 0, 0] == 0.5 + 0j


def test_write_zero_s_one_port():
    """S = 0 at 1 GHz in RI emits 'data line 1 0 0' under the GHz header."""
    grid = FrequencyGrid(np.array([1e9]))
    m = NetworkModel(grid, np.zeros((1, 1, 1), complex), "S", 50.0)
    lines = [l for l in write_touchstone(m, "RI").splitlines()
             if not l.startswith("!")]
    assert lines[0] == "# GHz S RI R 50"
    assert lines[1] == "1 0 0"


def test_write_ma_minus_one():
    """S = -1 in MA format is magnitude 1 at 180 degrees."""
    grid = FrequencyGrid(np.array([1e9]))
    m = NetworkModel(grid, -np.ones((1, 1, 1), complex), "S", 50.0)
    data = [l for l in write_touchstone(m, "MA").splitlines()
            if not l.startswith(("!", "#"))][0].split()
    assert float(data[1]) == pytest.approx(1.0)
    assert abs(float(data[2])) == pytest.approx(180.0)


@pytest.mark.parametrize("fmt", ["RI", "MA", "DB"])
@pytest.mark.parametrize("n_ports", [1, 2, 3])
def test_round_trip_all_formats(fmt, n_ports):
    """write_touchstone(parse_touchstone(x)) re-parses to 1e-12 relative."""
    rng = np.random.default_rng(42 + n_ports)
    m = _random_passive_model(rng, n_ports)
    text = write_touchstone(m, fmt)
    m2 = parse_touchstone(text, n_ports)
    scale = np.abs(m.data).max()
    assert np.allclose(m2.data, m.data, rtol=0, atol=1e-12 * scale)
    assert np.allclose(m2.grid.points, m.grid.points, rtol=1e-12)


def test_two_port_column_order():
    """2-port rows hold S11 S21 S12 S22."""
    text = "# Hz S RI R 50\n1e6 0.11 0 0.21 0 0.12 0 0.22 0\n"
    m = parse_touchstone(text, 2)
    assert m.data[0, 0, 0] == 0.11
    assert m.data[0, 1, 0] == 0.21
    assert m.data[0, 0, 1] == 0.12
    assert m.data[0, 1, 1] == 0.22


def test_unit_conversion_equivalence():
    """The same network written in Hz and GHz parses to identical grids."""
    rng = np.random.default_rng(1)
    m = _random_passive_model(rng, 2)
    a = parse_touchstone(write_touchstone(m, "RI", freq_unit="Hz"), 2)
    b = parse_touchstone(write_touchstone(m, "RI", freq_unit="GHz"), 2)
    assert np.allclose(a.grid.points, b.grid.points, rtol=1e-12)


def test_wrapped_matrix_lines():
    """Large matrices wrapped across lines re-assemble by value count."""
    text = ("# Hz S RI R 50\n"
            "1e6 1 0 2 0 3 0\n  4 0 5 0 6 0\n  7 0 8 0 9 0\n")
    m = parse_touchstone(text, 3)
    assert m.data[0, 0, 0] == 1 and m.data[0, 2, 2] == 9


def test_error_unknown_option_token():
    with pytest.raises(TouchstoneError, match="line 1"):
        parse_touchstone("# GHz S XX R 50\n1 0 0\n", 1)


def test_error_non_monotonic_frequency():
    with pytest.raises(TouchstoneError, match="non-monotonic"):
        parse_touchstone("# Hz S RI R 50\n2e6 0 0\n1e6 0 0\n", 1)


def test_error_wrong_value_count():
    with pytest.raises(TouchstoneError, match="value count"):
        parse_touchstone("# Hz S RI R 50\n1e6 0 0\n2e6 0\n", 1)


def test_error_bad_token_has_line_number():
    with pytest.raises(TouchstoneError, match="line 3"):
        parse_touchstone("! hi\n# Hz S RI R 50\n1e6 zero 0\n", 1)


def test_touchstone_v2_rejected():
    with pytest.raises(TouchstoneError, match="2.x"):
        parse_touchstone("[Version] 2.0\n# Hz S RI R 50\n", 1)


def test_noise_section_skipped_with_warning():
    """A decreasing frequency in a 2-port file starts noise data: skipped."""
    text = ("# Hz S RI R 50\n"
            "1e6 0.1 0 0.2 0 0.2 0 0.1 0\n"
            "2e6 0.1 0 0.2 0 0.2 0 0.1 0\n"
            "1e6 3.0 0.5 0.4 0.3 20\n"
            "2e6 2.5 0.4 0.4 0.2 18\n")
    with pytest.warns(UserWarning, match="noise"):
        m = parse_touchstone(text, 2)
    assert len(m.grid) == 2


def test_port_count_from_extension(tmp_path):
    rng = np.random.default_rng(5)
    m = _random_passive_model(rng, 3)
    path = tmp_path / "board.s3p"
    path.write_text(write_touchstone(m, "RI"))
    m2 = read_touchstone(path)
    assert m2.n_ports == 3


def test_dc_point_accepted():
    text = "# Hz S RI R 50\n0 0.5 0\n1e6 0.4 0\n"
    m = parse_touchstone(text, 1)
    assert m.grid.points[0] == 0.0
    z = s_to_z(m)
    assert z.data[0, 0, 0] == pytest.approx(50 * 1.5 / 0.5)


def test_s_to_z_matched_termination():
    """1-port S = 0 at 50 ohm reference is Z = 50."""
    grid = FrequencyGrid(np.array([1e6, 1e7]))
    m = NetworkModel(grid, np.zeros((2, 1, 1), complex), "S", 50.0)
    assert np.allclose(s_to_z(m).data, 50.0)


def test_s_to_z_short_circuit():
    """1-port S = -1 maps to the Z -> 0 limit (|1 - S| is well away from 0)."""
    grid = FrequencyGrid(np.array([1e6]))
    m = NetworkModel(grid, -np.ones((1, 1, 1), complex), "S", 50.0)
    assert abs(s_to_z(m).data[0, 0, 0]) < 1e-12


def test_s_to_z_singular_open_names_frequency():
    """S = +1 (ideal open) makes I - S singular; the error says where."""
    grid = FrequencyGrid(np.array([1e6, 2e6]))
    s = np.zeros((2, 1, 1), complex)
    s[1, 0, 0] = 1.0
    m = NetworkModel(grid, s, "S", 50.0)
    with pytest.raises(ConversionError, match="2e"):
        s_to_z(m)


def test_z_to_s_analytic_reflection():
    """Z = 100 at z0 = 50 gives S = 1/3; Z = 50 gives S = 0."""
    grid = FrequencyGrid(np.array([1e6]))
    for z_val, s_val in [(100.0, 1 / 3), (50.0, 0.0)]:
        m = NetworkModel(grid, np.full((1, 1, 1), z_val, complex), "Z")
        assert z_to_s(m, 50.0).data[0, 0, 0] == pytest.approx(s_val)


def test_s_to_z_against_nodal_two_port():
    """Random RLC two-port: s_to_z equals the nodal-analysis Z directly."""
    rng = np.random.default_rng(9)
    f = np.logspace(5, 8, 31)
    circ = OracleCircuit()
    circ.add(1, 2, r=3.0, l=5e-9)
    circ.add(1, 0, r=0.5, c=2e-9)
    circ.add(2, 0, r=20.0)
    z_ref = circ.z_at_ports([1, 2], f)
    zmod = NetworkModel(FrequencyGrid(f), z_ref, "Z")
    s = z_to_s(zmod, 50.0)
    back = s_to_z(s)
    assert np.allclose(back.data, z_ref, rtol=1e-9)


@pytest.mark.parametrize("n_ports", [1, 2, 3, 4])
def test_conversion_round_trips(n_ports):
    """s_to_z(z_to_s(m)) = m and Y-domain loops close within 1e-10."""
    rng = np.random.default_rng(100 + n_ports)
    m = _random_passive_model(rng, n_ports)
    z = s_to_z(m)
    s2 = z_to_s(z, m.ref_impedance)
    assert np.allclose(s2.data, m.data, rtol=0, atol=1e-10)
    y = s_to_y(m)
    s3 = y_to_s(y, m.ref_impedance)
    assert np.allclose(s3.data, m.data, rtol=0, atol=1e-10)
    assert np.allclose(y_to_z(z_to_y(z)).data, z.data, rtol=1e-10)


def test_reciprocity_preserved():
    """Symmetric S stays symmetric through every conversion."""
    rng = np.random.default_rng(77)
    m = _random_passive_model(rng, 3)
    for conv in (s_to_z(m).data, s_to_y(m).data):
        assert np.allclose(conv, np.transpose(conv, (0, 2, 1)), rtol=1e-10,
                           atol=1e-10 * np.abs(conv).max())


def test_labels_preserved_through_conversion():
    grid = FrequencyGrid(np.array([1e6]))
    m = NetworkModel(grid, np.zeros((1, 2, 2), complex), "S", 50.0,
                     ("die", "vrm"))
    assert s_to_z(m).port_labels == ("die", "vrm")
