import csv
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sppsdirac.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARTIAL,
    ConfigError,
    ProblemSpec,
    SolverSpec,
    format_complex,
    main,
    parse_complex,
    parse_spec,
)

CONFIGS = Path(__file__).parent.parent / "configs"

FREE_BESSEL = """
[problem]
kind = bessel
l = 0
[mesh]
a = 1
M = 2001
[solver]
N = 60
want = 5
"""

FREE_DIRAC = """
[problem]
kind = dirac
kappa = 1
[mesh]
a = 1
M = 2001
[coefficients]
p1 = 1
p2 = 1
[solver]
N = 60
want = {want}
"""


def write(tmp_path, text, name="p.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text,val", [
    ("1.5", 1.5), ("2i", 2j), ("-i", -1j), ("1-2.5i", 1 - 2.5j), ("1 + i", 1 + 1j),
    ("[1, -2.5]", 1 - 2.5j), ("-3e-2+4E1i", -0.03 + 40j), (".5", 0.5),
])
def test_parse_complex(text, val):
    assert parse_complex(text) == val


@pytest.mark.parametrize("text", ["", "abc", "1+", "[1, 2", "[1]", "1 2i", "i1"])
def test_parse_complex_rejects(text):
    with pytest.raises(ConfigError):
        parse_complex(text)


@given(st.complex_numbers(allow_nan=False, allow_infinity=False))
def test_complex_format_round_trip(z):
    assert parse_complex(format_complex(z)) == z


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    spec = parse_spec(path.read_text())
    assert parse_spec(spec.to_text()) == spec


@settings(max_examples=50, deadline=None)
@given(
    st.integers(3, 200), st.integers(1, 500),
    st.floats(-20, -1), st.floats(0.05, 0.95),
    st.complex_numbers(max_magnitude=50, allow_nan=False),
    st.integers(1, 2000).map(lambda k: 5 * k + 1),
)
def test_generated_specs_round_trip(N, want, sigma, frac, shift, M):
    spec = ProblemSpec(kind="dirac", kappa=1, a=2.5, M=M,
                       coefficients={"p1": "1 + x^2", "q": "-1/x"},
                       solver=SolverSpec(N=N, want=want, sigma=sigma, tau0=frac * sigma,
                                         shift=shift))
    assert parse_spec(spec.to_text()) == spec


@pytest.mark.parametrize("text,msg", [
    ("[problem]\nkind = dirak\n", "kind must be one of"),
    ("[mesh]\na = 1\n", "missing"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\nM = 12\n", "block rule"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\n[coefficients]\nzz = 1\n", "unknown coefficients"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\n[coefficients]\np1 = x +\n", "offset"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = -1\n", "positive"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\n[extra]\n", "unknown section"),
    ("[problem]\nkind = bessel\n[mesh]\na = 1\n", r"need \[problem\] l"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\n[solver]\nN = many\n", "not an integer"),
    ("[problem]\nkind = dirac\nkappa = 1\n[mesh]\na = 1\n[solver]\nsigma = -2\ntau0 = 3\n", "tau0"),
    ("[problem]\nkind = hydrogenic\nkappa = 2\n", "Z and kappa"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_spec(text)


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["solve", str(write(tmp_path, "[problem]\nkind = none\n"))]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a pole at the interior node x = 1/2
    text = FREE_DIRAC.format(want=3).replace("p1 = 1", "p1 = 1/(x - 0.5)")
    assert main(["solve", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err


def test_vanishing_p1_is_rescued_by_a_shift(tmp_path):
    text = FREE_DIRAC.format(want=3).replace("p1 = 1", "p1 = x")
    assert main(["solve", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "eigenvalues.csv")
    assert len(rows) == 3 and any(float(r["shift_im"]) != 0 for r in rows)


def test_partial_result_exit_code(tmp_path, capsys):
    text = FREE_DIRAC.format(want=80)
    assert main(["solve", str(write(tmp_path, text)), "--out-dir", str(tmp_path)]) == EXIT_PARTIAL
    assert "partial result" in capsys.readouterr().err
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["incomplete"] and summary["count"] < 80


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_dirac_csv_schema_and_determinism(tmp_path):
    cfg = write(tmp_path, FREE_DIRAC.format(want=4))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", str(cfg), "--out-dir", str(a)]) == EXIT_OK
    assert main(["solve", str(cfg), "--out-dir", str(b)]) == EXIT_OK
    assert (a / "eigenvalues.csv").read_bytes() == (b / "eigenvalues.csv").read_bytes()
    rows = read_csv(a / "eigenvalues.csv")
    assert list(rows[0]) == ["n", "lambda_re", "lambda_im", "residual", "shift_re", "shift_im", "stable"]
    assert [r["n"] for r in rows] == ["1", "2", "3", "4"]
    assert all(float(r["residual"]) <= 1e-5 and r["stable"] == "true" for r in rows)


def test_free_dirac_eigenvalues(tmp_path):
    # p1 = p2 = 1, kappa = 1 reduces to -u'' = (lambda - 1)^2 u, so u = sin((lambda - 1) x)
    cfg = write(tmp_path, FREE_DIRAC.format(want=4))
    assert main(["solve", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    lam = np.array([complex(float(r["lambda_re"]), float(r["lambda_im"]))
                    for r in read_csv(tmp_path / "eigenvalues.csv")])
    k = np.abs(lam - 1) / np.pi
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)
    assert np.all(np.round(k) >= 1)


def test_bessel_csv_has_sqrt_lambda(tmp_path):
    cfg = write(tmp_path, FREE_BESSEL)
    assert main(["solve", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "eigenvalues.csv")
    assert list(rows[0])[-1] == "sqrt_lambda_re"
    w = np.array([float(r["sqrt_lambda_re"]) for r in rows])
    np.testing.assert_allclose(w, np.pi * np.arange(1, 6), atol=1e-9)
    lam = np.array([float(r["lambda_re"]) for r in rows])
    np.testing.assert_allclose(lam, w ** 2, rtol=1e-12)


def test_hydrogenic_outputs(tmp_path):
    from test_hydrogenic import OXYGEN_LEVELS

    assert main(["solve", str(CONFIGS / "oxygen.ini"), "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "oxygen.csv")
    assert list(rows[0])[-1] == "E_minus_mc2"
    e = np.array([float(r["E_minus_mc2"]) for r in rows])
    np.testing.assert_allclose(e, OXYGEN_LEVELS, rtol=1e-9)
    for n in range(1, 5):
        wave = tmp_path / f"oxygen_wave_{n}.csv"
        assert wave.read_text().splitlines()[0] == "x,u_re,u_im,v_re,v_im"
        data = np.loadtxt(wave, delimiter=",", skiprows=1)
        # large component has n - 1 interior nodes
        F = data[1:, 1]
        assert np.count_nonzero(np.diff(np.sign(F[np.abs(F) > 1e-12 * np.abs(F).max()]))) == n - 1
    assert not (tmp_path / "oxygen_wave_5.csv").exists()


def test_check_mode(tmp_path, capsys):
    assert main(["solve", str(CONFIGS / "boyd.ini"), "--check"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ok   config round trip" in out and "FAIL" not in out
