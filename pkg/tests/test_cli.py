import pytest

from algebroid.cli import RunConfig, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def idents(text):
    return [line for line in text.splitlines() if line.startswith("IDENT ")]


def test_export_then_validate_round_trip(capsys, tmp_path):
    code, text, _ = run(capsys, "export", "so3")
    assert code == 0
    path = tmp_path / "so3.chart"
    path.write_text(text)
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 0
    assert idents(out) and all(line.endswith("OK") for line in idents(out))


def test_variable_out_of_range_is_parse_error(capsys, tmp_path):
    path = tmp_path / "bad.chart"
    path.write_text("chart d=0 r=2\nc 1 2 1 = x1\n")
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2
    assert "line 2" in err


def test_broken_jacobi_lists_components(capsys, tmp_path):
    path = tmp_path / "broken.chart"
    path.write_text("chart d=0 r=3\nc 1 2 3 = 1\nc 2 3 1 = 1\nc 1 3 2 = -1\nc 1 2 1 = 1\n")
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 1
    (line,) = [l for l in idents(out) if "chart-axioms" in l]
    assert "FAIL" in line and "jacobi" in line


def test_fedosov_so3_all_ok(capsys):
    code, out, _ = run(capsys, "fedosov", "so3", "--degree", "4", "--connection", "canonical")
    assert code == 0
    lines = idents(out)
    assert any("flatness-equation" in l for l in lines)
    assert any(l.startswith("IDENT D-squared") for l in lines)
    assert all(l.endswith("OK") for l in lines)


def test_fedosov_abelian_reports_A_zero(capsys):
    code, out, _ = run(capsys, "fedosov", "abelian2", "--degree", "3")
    assert code == 0
    assert "A = 0" in out.splitlines()


def test_fedosov_refuses_torsion(capsys, tmp_path):
    path = tmp_path / "gamma.txt"
    path.write_text("gamma 1 2 3 = 1\n")
    code, out, _ = run(capsys, "fedosov", "so3", "--connection", str(path))
    assert code == 1
    # Gamma_12^3 = 1 cancels c_12^3 but leaves the other two brackets as torsion
    assert "refused: connection has torsion: T_23^1 = -1, T_13^2 = 1" in out


def test_fedosov_degree_too_small(capsys):
    code, _, err = run(capsys, "fedosov", "so3", "--degree", "1")
    assert code == 2 and "degree" in err


def test_quantize_abelian(capsys):
    code, out, _ = run(capsys, "quantize", "abelian2", "e1^e2", "--order", "2")
    assert code == 0
    assert "order 2:" in out
    assert any("cocycle[order 2]" in l for l in idents(out))


def test_quantize_refuses_non_mc(capsys):
    code, out, _ = run(capsys, "quantize", "so3", "e1^e2")
    assert code == 1
    assert "IDENT maurer-cartan FAIL maurer-cartan (1 2 3): 2" in out


def test_quantize_zero_bivector(capsys):
    code, out, _ = run(capsys, "quantize", "poisson_cotangent", "0", "--order", "2", "--sample", "x1", "x2")
    assert code == 0
    assert "order 0: (1)*1|1" in out and "order 1: 0" in out
    # a*b = ab with no corrections
    i = out.splitlines().index("x1 * x2:")
    assert out.splitlines()[i + 1:i + 4] == ["  order 0: x1*x2", "  order 1: 0", "  order 2: 0"]


def test_quantize_inconsistent_bound(capsys):
    code, out, _ = run(capsys, "quantize", "abelian2", "e1^e2", "--bound", "1")
    assert code == 1
    assert "L=1" in out


def test_lines_format_prints_only_idents(capsys):
    code, out, _ = run(capsys, "--format", "lines", "curvature", "so3")
    assert code == 0
    assert out.splitlines() == idents(out)


def test_curvature_output(capsys):
    code, out, _ = run(capsys, "curvature", "so3")
    assert code == 0
    assert "R 1 2 1 2 = -1/4" in out


def test_form_d(capsys):
    code, out, _ = run(capsys, "form-d", "so3", "xi1")
    assert code == 0
    assert "d_E form: (-1) * xi2^xi3" in out


def test_brackets(capsys):
    code, out, _ = run(capsys, "bracket", "so3", "e1", "e2")
    assert code == 0 and "[u, v]_E = (1) * e3" in out
    code, out, _ = run(capsys, "bracket", "so3", "e1|1", "e2", "--kind", "gerstenhaber")
    assert code == 0


def test_cohomology_window(capsys):
    code, out, _ = run(capsys, "cohomology", "abelian2", "--arity", "1", "--order", "2")
    assert code == 0
    assert len([l for l in idents(out) if "hkr-quasi-isomorphism" in l]) == 3


def test_output_is_deterministic(capsys):
    first = run(capsys, "validate", "poisson_cotangent", "--seed", "7")
    second = run(capsys, "validate", "poisson_cotangent", "--seed", "7")
    assert first == second


def test_run_config_invariants():
    with pytest.raises(ValueError):
        RunConfig("quantize", order=0)
    assert RunConfig("fedosov", N=2).N == 2
