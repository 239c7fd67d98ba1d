import csv
import io
import json

import numpy as np
import pytest

from estc_dirac.chiral_core import DEFAULT_PARAMS, solve_dispersion
from estc_dirac.cli import main, parse_config_file
from estc_dirac.observables import observables_at
from estc_dirac.store import CACHE_ENV, SolutionCache, dump_branches, load_branches, solve_cached


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def _table(text):
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, v = line[2:].split(" = ", 1)
            header[k] = v
        else:
            body.append(line)
    return header, list(csv.DictReader(io.StringIO("\n".join(body))))


def test_dispersion_at_rest(capsys):
    code, out = _run(capsys, "dispersion", "--q1", "0")
    header, rows = _table(out)
    assert code == 0
    assert header["omega"] == "0.01" and header["gmax"] == "12"
    assert "jobs" not in header and "out" not in header
    assert float(rows[0]["xi1"]) == pytest.approx(1.9997001099e-4, abs=1e-14)
    assert float(rows[0]["dxi"]) == 0.0


def test_dispersion_default_grid(capsys):
    code, out = _run(capsys, "dispersion")
    _, rows = _table(out)
    assert code == 0
    q = [float(r["q1"]) for r in rows]
    assert q == [0.01 * 2.0 ** m for m in range(-10, 16)]
    assert all(r["status"] == "ok" for r in rows)


def test_zero_field_gives_zero_shift(capsys):
    code, out = _run(capsys, "dispersion", "--am", "0", "--q1", "0,0.5")
    _, rows = _table(out)
    assert code == 0
    for r in rows:
        assert float(r["xi1"]) == 0.0 and float(r["xi2"]) == 0.0


def test_coeffs_at_rest(capsys):
    code, out = _run(capsys, "coeffs", "--q1", "0")
    _, rows = _table(out)
    r = rows[0]
    assert code == 0
    assert abs(abs(float(r["x210"])) - 0.999875) < 1e-6
    # rest-frame identities between the two branches
    assert float(r["x210+x120"]) == 0.0
    assert float(r["y221-y111"]) == 0.0


def test_check_command(capsys):
    code, out = _run(capsys, "check")
    _, rows = _table(out)
    assert code == 0
    assert rows and all(r["passed"] == "True" for r in rows)


def test_jobs_do_not_change_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    grid = "omega,-3,3"
    assert main(["observables", "--q1-grid", grid, "--out", str(a)]) == 0
    assert main(["observables", "--q1-grid", grid, "--jobs", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cache_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.delenv(CACHE_ENV, raising=False)
    plain, cached, again = (tmp_path / n for n in ("p.csv", "c.csv", "d.csv"))
    cache = tmp_path / "cache"
    argv = ["precession", "--q1", "0.01,0.02"]
    assert main(argv + ["--out", str(plain)]) == 0
    assert main(argv + ["--out", str(cached), "--cache-dir", str(cache)]) == 0
    assert any(cache.iterdir())
    assert main(argv + ["--out", str(again), "--cache-dir", str(cache)]) == 0
    assert plain.read_bytes() == cached.read_bytes() == again.read_bytes()


def test_cache_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    assert main(["dispersion", "--q1", "0.01", "--out", str(tmp_path / "o.csv")]) == 0
    assert any(tmp_path.glob("*/*.json"))
    cache = SolutionCache.from_env()
    hit = cache.get(DEFAULT_PARAMS, 0.01, 1)
    assert hit is not None and hit.xi == solve_dispersion(0.01)[0].xi


def test_json_round_trip_reproduces_observables(tmp_path):
    path = tmp_path / "b.json"
    q1 = 0.37
    dump_branches(solve_dispersion(q1), path)
    loaded = load_branches(path)
    a = observables_at(q1)
    b = observables_at(q1, branches=tuple(loaded))
    for s in "+-":
        for f in ("E", "P1", "J1", "S1"):
            assert abs(getattr(a.means[s], f) - getattr(b.means[s], f)) < 1e-14


def test_solve_cached_matches_direct(tmp_path):
    cache = SolutionCache(tmp_path)
    first = solve_cached(0.05, cache=cache)
    second = solve_cached(0.05, cache=cache)
    for x, y in zip(first, second):
        assert x.xi == y.xi
        assert np.array_equal(x.table, y.table)


def test_json_format(capsys):
    code, out = _run(capsys, "dispersion", "--q1", "0.01", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["config"]["command"] == "dispersion"
    assert doc["rows"][0]["status"] == "ok"


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\ngmax = 10\nq1 = 0.01\nomega = 0.01  # inline\n")
    assert parse_config_file(cfg) == {"gmax": 10, "q1": (0.01,), "omega": 0.01}
    _, out = _run(capsys, "dispersion", "--config", str(cfg))
    assert _table(out)[0]["gmax"] == "10"
    _, out = _run(capsys, "dispersion", "--config", str(cfg), "--gmax", "8")
    assert _table(out)[0]["gmax"] == "8"


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    with pytest.raises(SystemExit) as exc:
        main(["dispersion", "--config", str(cfg)])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["fields", "--alpha", "2.0"],
    ["fields", "--delta", "-1"],
    ["dispersion", "--gmax", "5"],
    ["dispersion", "--jobs", "0"],
    ["fields", "--mode", "sideways"],
])
def test_bad_settings_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


@pytest.mark.parametrize("method", ["closed", "direct"])
def test_fields_bidirectional_example(capsys, method):
    code, out = _run(capsys, "fields", "--mode", "bi2", "--qm", "1", "--grid", "16", "--field-method", method)
    _, rows = _table(out)
    assert code == 0 and len(rows) == 256
    assert max(abs(float(r["v1"])) for r in rows) < 1e-12
    assert min(np.hypot(np.hypot(float(r["v1"]), float(r["v2"])), float(r["v3"])) for r in rows) >= 0.005


def test_unresolved_splitting_flagged(capsys):
    code, out = _run(capsys, "dispersion", "--q1", "0.01,1e6")
    _, rows = _table(out)
    assert code == 1
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("unresolved")


def test_failed_points_recorded(capsys):
    code, out = _run(capsys, "observables", "--q1", "0.01", "--gmax", "4", "--edge-tol", "1e-300")
    _, rows = _table(out)
    assert code == 1
    assert rows[0]["status"].startswith("error: TruncationError")
    assert rows[0]["E_plus"] == "nan"
