import json
import math

import pytest
import yaml

from orbitcount.cli import cache_gc, main, parse_config, ConfigError


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_digest: ")
    header = lines[1].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[2:]]


def test_count_trivial_rows(tmp_path):
    cfg = write_cfg(tmp_path, {"lattice": "sl2z", "vector": [1, 0], "kind": "count",
                               "params": {"R_grid": [1.0, math.sqrt(2)]}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 0
    header, rows = read_rows(tmp_path / "o" / "counts.csv")
    assert header == ["lattice", "region", "R", "N", "c_fit", "residual", "exponent"]
    assert [(float(r["R"]), int(r["N"])) for r in rows] == [(1.0, 4), (math.sqrt(2), 8)]


def test_fit_with_warm_cache_is_byte_identical(tmp_path):
    data = {"lattice": "sl2z", "kind": "fit", "params": {"R_grid": {"start": 8, "stop": 120, "num": 30},
                                                         "expect": {"value": 6 / math.pi, "rtol": 0.02}}}
    cfg = write_cfg(tmp_path, data)
    cache = str(tmp_path / "cache")
    assert main(["--config", cfg, "--out", str(tmp_path / "a"), "--cache-dir", cache]) == 0
    assert list((tmp_path / "cache").glob("*.orb"))
    assert main(["--config", cfg, "--out", str(tmp_path / "b"), "--cache-dir", cache, "--workers", "2"]) == 0
    a, b = (tmp_path / "a" / "fit.csv").read_bytes(), (tmp_path / "b" / "fit.csv").read_bytes()
    assert a == b and b"\r" not in a
    report = json.loads((tmp_path / "b" / "fit.json").read_text())
    assert report["constant"] == pytest.approx(6 / math.pi, rel=0.02)
    digest = report["config_digest"]
    assert a.decode().splitlines()[0] == f"# config_digest: {digest}"


def test_malformed_config_reports_field_path(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"lattice": "sl2z", "kind": "fit", "params": {"R_grid": [10, -3]}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["field"] == "params.R_grid[1]"
    assert json.loads((tmp_path / "o" / "error.json").read_text()) == err


@pytest.mark.parametrize("data,path", [
    ({"lattice": "gamma0:7", "kind": "count"}, "lattice"),
    ({"lattice": "sl2z", "kind": "histogram"}, "kind"),
    ({"lattice": "sl2z", "kind": "count", "vector": [0, 0]}, "vector"),
    ({"lattice": "sl2z", "kind": "count", "colour": 1}, "colour"),
    ({"lattice": "sl2z", "kind": "count", "enumeration": {"norm_slack": 0.1}}, "enumeration"),
])
def test_config_validation(data, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert exc.value.path == path


def test_failed_numerical_check_exits_2(tmp_path):
    cfg = write_cfg(tmp_path, {"lattice": "sl2z", "kind": "sector",
                               "params": {"R": 60, "length": 1.0, "expect": {"value": 0.5, "rtol": 0.01}}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_short_cap_is_an_input_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"lattice": "sl2z", "kind": "residue", "params": {"cap": 300}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["field"] == "params.cap" and "cap must be at least" in err["message"]


@pytest.mark.parametrize("kind,params,artifact", [
    ("sector", {"R": 80, "bins": 4}, "sector.json"),
    ("star", {"R_grid": {"start": 10, "stop": 100, "num": 8}, "source": "oracle"}, "star.csv"),
    ("eisenstein", {"cap": 60, "s": [2.0, [1.5, 2.0]], "n": 2}, "eisenstein.json"),
    ("selberg", {"degrees": [8, 16]}, "selberg.json"),
    ("scattering", {"s": 1.25, "C_max": 80}, "scattering.json"),
    ("lift", {"domains": ["half_disk", {"type": "lipschitz_star", "slope": 0.5}], "T": [5, 8]}, "lift.json"),
    ("wellround", {"etas": [0.02, 0.01, 0.005]}, "wellround.json"),
    ("sandwich", {"R": [40, 80], "U": [4, 8]}, "sandwich.json"),
])
def test_every_kind_runs(tmp_path, kind, params, artifact):
    cfg = write_cfg(tmp_path, {"lattice": "sl2z", "kind": kind, "params": params})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 0
    out = tmp_path / "o" / artifact
    text = out.read_text()
    assert "config_digest" in text


def test_hecke_lift_through_cli(tmp_path):
    cfg = write_cfg(tmp_path, {"lattice": "hecke:5", "kind": "lift", "params": {"domains": ["quarter_disk"], "T": [6]}})
    assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_cache_gc_examples(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cache_gc(empty, 0)["removed"] == []
    cache = tmp_path / "c"
    cache.mkdir()
    for i, size in enumerate((100, 200, 300)):
        f = cache / f"{i}.orb"
        f.write_bytes(b"ORB1" + bytes(size))
    assert cache_gc(cache, 10_000)["removed"] == []
    rep = cache_gc(cache, 0)
    assert sorted(r["file"] for r in rep["removed"]) == ["0.orb", "1.orb", "2.orb"]
    assert not list(cache.glob("*.orb"))
    with pytest.raises(FileNotFoundError):
        cache_gc(tmp_path / "missing", 0)


def test_cache_gc_drops_least_recent_first(tmp_path):
    import os

    for i in range(3):
        f = tmp_path / f"{i}.orb"
        f.write_bytes(bytes(100))
        os.utime(f, ns=(10**9 * (10 - i), 10**9 * (10 - i)))  # 2.orb is the oldest
    rep = cache_gc(tmp_path, 150)
    assert [r["file"] for r in rep["removed"]] == ["2.orb", "1.orb"]


def test_cli_cache_gc_flag(tmp_path, capsys):
    assert main(["--cache-dir", str(tmp_path), "--cache-gc", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["removed"] == []
    assert main(["--cache-gc", "0"]) == 1


def test_verify_single_criterion(tmp_path, capsys):
    assert main(["--verify", "--only", "8", "--out", str(tmp_path)]) == 0
    assert "[PASS]  8" in capsys.readouterr().out
    assert (tmp_path / "acceptance.json").exists()


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "o")]) == 1
