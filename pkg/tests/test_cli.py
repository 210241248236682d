import csv
import io
import json
import math

import numpy as np
import pytest

from cone_exit.cli import (
    EXIT_CHECK,
    EXIT_OK,
    EXIT_UNCONVERGED,
    EXIT_USAGE,
    RunConfig,
    SCHEMA,
    main,
    map_drifts,
    read_config_file,
    resolve_config,
)
from cone_exit.errors import DomainError
from cone_exit.geometry import Wedge, classify_regime

HALF_PI = repr(math.pi / 2)
TWO_THIRDS = repr(2 * math.pi / 3)


def run(capsys, *argv):
    try:
        rc = main(list(argv))
    except SystemExit as exc:
        rc = exc.code
    out = capsys.readouterr()
    return rc, out.out, out.err


def csv_body(text):
    lines = text.splitlines()
    assert lines[0] == SCHEMA
    assert lines[1].startswith("# config ")
    assert lines[2].startswith("# verdict ")
    cfg = json.loads(lines[1][len("# config "):])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[3:]))))
    return cfg, lines[2].split()[-1], rows


@pytest.mark.parametrize(
    "beta, drift, regime, alpha",
    [
        (HALF_PI, "-1,-1", "A", 3.0),
        (HALF_PI, "0,0", "B", 1.0),
        (HALF_PI, "1,1", "C", 0.0),
        (HALF_PI, "1,0", "D", 0.5),
        (HALF_PI, "1,-1", "E", 1.5),
        (HALF_PI, "0,-1", "F", 2.0),
        (TWO_THIRDS, "-0.6,-0.8", "A", 2.5),
    ],
)
def test_classify(capsys, beta, drift, regime, alpha):
    rc, out, _ = run(capsys, "classify", "--beta", beta, "--drift", drift)
    assert rc == EXIT_OK
    _, verdict, rows = csv_body(out)
    assert verdict == "ok"
    assert rows[0]["regime"] == regime
    assert float(rows[0]["alpha"]) == pytest.approx(alpha, abs=1e-14)




def test_classify_reflex(capsys):
    rc, out, _ = run(capsys, "classify", "--beta", "4.0", "--drift", "-1,-1")
    assert rc == EXIT_OK
    row = csv_body(out)[2][0]
    assert row["regime"] == "C"
    assert row["polar"] == "exterior"


def test_classify_proximity_warning(capsys):
    rc, out, err = run(capsys, "classify", "--beta", HALF_PI, "--drift", "1,1e-9")
    assert rc == EXIT_OK
    assert "warning" in err
    assert csv_body(out)[2][0]["warning"]


def test_degrees_rejected(capsys):
    rc, _, err = run(capsys, "classify", "--beta", "90deg", "--drift", "1,1")
    assert rc == EXIT_USAGE
    assert "radians" in err
    rc, _, _ = run(capsys, "classify", "--beta", "1.5", "--rotation", "30°", "--drift", "1,1")
    assert rc == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["classify", "--drift", "1,1"],
        ["classify", "--beta", "7.0", "--drift", "1,1"],
        ["classify", "--beta", "1.0", "--drift", "1,1,1"],
        ["compare", "--beta", "1.0", "--drift", "1,1", "--start", "1,0.5", "--methods", "exact"],
        ["compare", "--beta", "1.0", "--drift", "1,1", "--start", "1,-0.5"],
        ["compare", "--domain", "weyl", "--dim", "3", "--drift", "0,1,2", "--start", "0,1,2", "--methods", "exact,mc"],
        ["compare", "--domain", "halfline", "--drift", "1", "--start", "1", "--t", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == EXIT_USAGE
    assert err


def test_unconverged_series_exit(capsys):
    rc, _, err = run(
        capsys, "compare", "--beta", TWO_THIRDS, "--drift", "1,1", "--start", "0.5,0.5", "--t", "1", "--max-terms", "3"
    )
    assert rc == EXIT_UNCONVERGED
    assert "converge" in err


def test_compare_halfline_converging(capsys):
    rc, out, _ = run(capsys, "compare", "--domain", "halfline", "--drift", "-1", "--start", "1", "--t", "10,20,40")
    assert rc == EXIT_OK
    _, verdict, rows = csv_body(out)
    assert verdict == "pass"
    assert [r["trend"] for r in rows] == ["converging"] * 3
    assert float(rows[-1]["ratio"]) == pytest.approx(0.92193054677, rel=1e-9)


def test_compare_inconclusive_trend_fails(capsys):
    rc, out, err = run(capsys, "compare", "--domain", "halfline", "--drift", "-1", "--start", "1", "--t", "1,2,3")
    assert rc == EXIT_CHECK
    assert csv_body(out)[1] == "fail"
    assert "inconclusive" in err


def test_compare_quarter_exact_mc(capsys):
    rc, out, _ = run(
        capsys, "compare", "--domain", "quarter", "--drift", "0.5,-0.5", "--start", "0.3,0.3",
        "--t", "0.25", "--methods", "exact,mc", "--paths", "20000", "--seed", "3",
    )
    assert rc == EXIT_OK
    row = csv_body(out)[2][0]
    assert row["ok"] == "true"
    assert abs(float(row["mc_z"])) <= 4


def test_compare_detects_biased_mc(capsys):
    # coarse steps without the bridge correction overestimate survival
    rc, out, err = run(
        capsys, "compare", "--domain", "quarter", "--drift", "0,0", "--start", "0.2,0.2", "--t", "1",
        "--methods", "exact,mc", "--paths", "50000", "--dt", "0.1", "--bridge", "off",
    )
    assert rc == EXIT_CHECK
    assert "cross-check failed" in err


def test_compare_wedge_three_methods(capsys):
    rc, out, _ = run(
        capsys, "compare", "--beta", TWO_THIRDS, "--drift", "0.5,0.5", "--start", "0.5,0.5",
        "--t", "0.5", "--methods", "exact,asym,mc", "--paths", "20000", "--dt", "0.002",
    )
    assert rc == EXIT_OK
    row = csv_body(out)[2][0]
    for col in ("exact", "quad_error", "asym", "ratio", "mc", "mc_std_err", "mc_z", "ok"):
        assert row[col] != ""


def test_compare_weyl2_exact_matches_mc(capsys):
    rc, out, _ = run(
        capsys, "compare", "--domain", "weyl", "--drift", "0.5,-0.5", "--start", "0,0.4",
        "--t", "0.25", "--methods", "exact,mc", "--paths", "20000",
    )
    assert rc == EXIT_OK


def test_csv_is_byte_identical(capsys, tmp_path):
    args = ["compare", "--domain", "quarter", "--drift", "0.5,-0.5", "--start", "0.3,0.3",
            "--t", "0.25", "--methods", "exact,mc", "--paths", "5000", "--seed", "11"]
    out = tmp_path / "run.csv"
    assert run(capsys, *args, "-o", str(out))[0] == EXIT_OK
    first = out.read_bytes()
    assert run(capsys, *args, "-o", str(out))[0] == EXIT_OK
    assert out.read_bytes() == first


def test_json_round_trip(capsys):
    rc, out, _ = run(
        capsys, "compare", "--domain", "halfline", "--drift", "-1", "--start", "1",
        "--t", "10,20,40", "--format", "json",
    )
    assert rc == EXIT_OK
    doc = json.loads(out)
    cfg = RunConfig.from_dict(doc["config"])
    assert cfg.to_dict() == doc["config"]
    assert cfg.drift == (-1.0,) and cfg.t == (10.0, 20.0, 40.0)
    assert doc["law"]["alpha_form"] == "3/2"
    assert doc["verdict"] == "pass"
    assert len(doc["rows"]) == 3


def test_config_file_and_precedence(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("# regime table\nbeta = 1.5707963267948966\ndrift = 1, 1  # interior\nformat = json\n")
    data = read_config_file(path)
    assert data["drift"] == "1, 1"
    cfg = resolve_config({"drift": "-1,-1"}, str(path))
    assert cfg.drift == (-1.0, -1.0)
    assert cfg.beta == pytest.approx(math.pi / 2)
    assert cfg.format == "json"
    assert cfg.paths == RunConfig().paths
    rc, out, _ = run(capsys, "classify", "--config", str(path))
    assert rc == EXIT_OK
    assert json.loads(out)["rows"][0]["regime"] == "C"
    rc, out, _ = run(capsys, "classify", "--config", str(path), "--drift", "-1,-1")
    assert json.loads(out)["rows"][0]["regime"] == "A"


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(DomainError):
        read_config_file(bad)
    bad.write_text("beta 1.0\n")
    with pytest.raises(DomainError):
        read_config_file(bad)


def _map_rows(capsys, beta, extra=()):
    rc, out, _ = run(capsys, "map", "--beta", beta, *extra)
    assert rc == EXIT_OK
    return csv_body(out)[2]


@pytest.mark.parametrize("beta", [HALF_PI, TWO_THIRDS])
def test_map_contains_every_regime(capsys, beta):
    rows = _map_rows(capsys, beta)
    assert {r["regime"] for r in rows} == set("ABCDEF")
    forms = {r["alpha_form"] for r in rows}
    assert forms == {"alpha1+1", "alpha1/2", "0", "1/2", "3/2", "alpha1/2+1"}


def test_map_reflex_has_no_polar_boundary(capsys):
    rows = _map_rows(capsys, "4.0")
    assert "F" not in {r["regime"] for r in rows}


def test_map_is_mirror_symmetric():
    w = Wedge(2 * math.pi / 3)
    drifts = [a for kind, a in map_drifts(w, 2.0, 4, 36) if kind == "grid"]
    b = w.beta
    R = np.array([[math.cos(b), math.sin(b)], [math.sin(b), -math.cos(b)]])
    for a in drifts:
        assert classify_regime(w, a) is classify_regime(w, R @ a)


def test_resolved_config_written_into_report(capsys):
    rc, out, _ = run(capsys, "map", "--beta", HALF_PI, "--resolution", "2", "--angles", "8")
    cfg, _, rows = csv_body(out)
    assert cfg["resolution"] == 2 and cfg["angles"] == 8
    assert cfg["dt"] == RunConfig().dt
