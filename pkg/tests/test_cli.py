import json
import math
import subprocess
import sys

import pytest

from qesdisorder import __version__, qes
from qesdisorder import cli


def run(*argv):
    return cli.main(list(argv))


def meta(path):
    return json.loads(path.read_text())


def test_moments_pass_through(out_dir):
    assert run("moments", "--c", "-5", "--orders", "4:16") == 0
    cols, rows = cli.read_csv(out_dir / "moments.csv")
    assert cols == ["c", "order", "raw", "excess", "ratio_next", "source"]
    assert [r[1] for r in rows] == list(range(4, 17, 2))
    for r in rows:
        assert r[2] == qes.raw_moment(r[1], -5.0)
        assert r[3] == qes.moment_report(-5.0, range(4, 18, 2)).excess[r[1]]
    m = meta(out_dir / "moments.json")
    assert m["status"] == "ok" and m["version"] == __version__
    assert m["parameters"]["c"] == -5.0 and m["parameters"]["orders"] == list(range(4, 17, 2))
    assert m["wall_time_s"] >= 0 and "tolerances" in m


def test_csv_cells_have_17_significant_digits(out_dir):
    run("potential", "--c", "-1", "--points", "11")
    line = (out_dir / "potential.csv").read_text().splitlines()[1]
    mant = line.split(",")[1].split("e")[0].replace("-", "").replace(".", "")
    assert len(mant) == 17


def test_exit_codes(out_dir):
    assert run("moments", "--c", "1", "--bogus") == cli.EXIT_USAGE
    assert run("nonsense") == cli.EXIT_USAGE
    assert run("moments") == cli.EXIT_USAGE
    assert run("moments", "--c", "1", "--orders", "34") == cli.EXIT_DOMAIN
    assert run("--name", "acc", "fock", "--c", "1", "--tol", "1e-30") == cli.EXIT_ACCURACY
    m = meta(out_dir / "acc.json")
    assert m["status"] == "error" and m["error_type"] == "AccuracyError"
    assert math.isfinite(m["achieved_estimate"]) and m["achieved_error"] > 0


def test_out_flag_overrides_env(out_dir, tmp_path):
    other = tmp_path / "elsewhere"
    assert run("--out", str(other), "harmonic", "--theta", "pi/4", "--omega2p", "2") == 0
    assert (other / "harmonic.csv").exists() and not (out_dir / "harmonic.csv").exists()


def test_json_format(out_dir):
    assert run("--format", "json", "gc-scan", "--c", "1") == 0
    data = json.loads((out_dir / "gc-scan.data.json").read_text())
    assert data["columns"] == ["c", "index", "alpha2_zero"]
    assert len(data["rows"]) == meta(out_dir / "gc-scan.json")["results"]["count"] == 7


@pytest.mark.parametrize("argv", [
    ["coupled", "--c1", "-1", "--c2", "-5", "--theta", "0.4"],
    ["sample", "--kind", "pure", "--params", "0", "--count", "500", "--seed", "9"],
    ["fock", "--c", "-1", "--state", "pi4"],
])
def test_metadata_round_trip(out_dir, tmp_path, argv):
    assert run(*argv) == 0
    stem = argv[0]
    first = (out_dir / f"{stem}.csv").read_text()
    again = tmp_path / "again"
    assert cli.rerun(out_dir / f"{stem}.json", out=again) == 0
    assert (again / f"{stem}.csv").read_text() == first


def test_figure_variance_vs_c(out_dir):
    assert run("figure", "--id", "variance-vs-c") == 0
    cols, rows = cli.read_csv(out_dir / "figure-variance-vs-c.csv")
    assert cols == ["c", "variance"]
    for c, v in rows:
        assert v == qes.variance(c)
    vs = [v for _, v in rows]
    assert all(a > b for a, b in zip(vs, vs[1:]))


@pytest.mark.parametrize("fid", sorted(set(cli.FIGURES) - {"purity-pi4"}))
def test_every_figure_runs(out_dir, fid):
    assert run("figure", "--id", fid) == 0
    cols, rows = cli.read_csv(out_dir / f"figure-{fid}.csv")
    assert rows and all(len(r) == len(cols) for r in rows)
    assert meta(out_dir / f"figure-{fid}.json")["parameters"]["id"] == fid


def test_module_entry_point(out_dir):
    r = subprocess.run([sys.executable, "-m", "qesdisorder", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout
    r = subprocess.run([sys.executable, "-m", "qesdisorder", "moments", "--c", "0", "--orders", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (out_dir / "moments.csv").exists()


def test_angle_and_list_parsers():
    assert cli.parse_angle("pi/4") == math.pi / 4
    assert cli.parse_angle("-pi/2") == -math.pi / 2
    assert cli.parse_angle("3pi/8") == 3 * math.pi / 8
    assert cli.parse_angle("0.3") == 0.3
    assert cli.parse_orders("4:10") == [4, 6, 8, 10]
    assert cli.parse_orders("2,6") == [2, 6]
    assert cli.parse_floats("0:1:3") == [0.0, 0.5, 1.0]
