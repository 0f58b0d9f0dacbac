import json
import subprocess
import sys

import pytest

from cloudlat.cli import main
from cloudlat.model import PathSpec
from cloudlat.records import load_records, write_paths
from cloudlat.synth import write_scenarios, Scenario
from cloudlat.model import DataSize

from conftest import REGIONS

TRUTH = {"format_version": 1, "b_ds": 1.25e9, "b_c": 1.0e9, "s_lan": 1.12e14, "s_sub": 9e13,
         "rho": 0.01, "c0": 0.04}


@pytest.fixture
def truth_file(tmp_path):
    path = tmp_path / "truth.json"
    path.write_text(json.dumps(TRUTH))
    return path


def scenarios():
    ids = [r["id"] for r in REGIONS]
    out = []
    k = 0
    for i, c in enumerate(ids):
        for j, s in enumerate(ids):
            if c == s:
                continue
            k += 1
            out.append(Scenario(c, s, PathSpec(1e5 * (1 + (7 * k) % 23), 0.0 if k % 3 == 0 else 4e5 * (1 + (5 * k) % 19),
                                               k % 4), DataSize(1_000_000 * (1 + (3 * k) % 17))))
    return out


@pytest.fixture
def sim_inputs(tmp_path):
    scen = scenarios()
    write_scenarios(scen, tmp_path / "scen.csv")
    write_paths({(s.client_id, s.server_id): s.path for s in scen}, tmp_path / "paths.csv")
    return tmp_path / "scen.csv", tmp_path / "paths.csv"


def test_predict_prints_ms(tmp_path, capsys):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"s_lan": 1.12e14, "s_sub": 1.12e14, "rho": 0.01, "c0": 0.0,
                                  "b_ds": 1.25e9, "b_c": 1.0e9}))
    code = main(["predict", "--params", str(params), "--bytes", "11200000", "--i-lan", "1e6",
                 "--i-sub", "6e6", "--n-relays", "2"])
    assert code == 0
    assert capsys.readouterr().out == "760.320\n"


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag():
    assert main(["predict", "--params", "x", "--bogus"]) == 1


def test_missing_file_is_io_error(tmp_path):
    assert main(["predict", "--params", str(tmp_path / "nope.json"), "--bytes", "1", "--i-lan", "0",
                 "--i-sub", "0", "--n-relays", "0"]) == 2


def test_simulate_fit_round_trip(tmp_path, truth_file, sim_inputs):
    scen, paths = sim_inputs
    meas = tmp_path / "m.jsonl"
    assert main(["simulate", "--truth", str(truth_file), "--scenarios", str(scen), "--noise-sigma", "0",
                 "--out", str(meas)]) == 0
    meta = json.loads((tmp_path / "m.jsonl.meta.json").read_text())
    assert meta["generator"] == "numpy.random.PCG64"
    out = tmp_path / "fit.json"
    assert main(["fit", "--measurements", str(meas), "--paths", str(paths), "--b-ds", "1.25e9",
                 "--b-c", "1e9", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert list(doc) == ["format_version", "s_lan", "s_sub", "rho", "c0", "b_ds", "b_c", "rmse", "r2",
                         "n_records", "rank_deficient", "notes"]
    assert doc["s_lan"] == pytest.approx(TRUTH["s_lan"], rel=1e-6)
    assert doc["s_sub"] == pytest.approx(TRUTH["s_sub"], rel=1e-6)
    assert doc["rho"] == pytest.approx(TRUTH["rho"], rel=1e-6)
    assert doc["c0"] == pytest.approx(TRUTH["c0"], rel=1e-6)
    assert doc["n_records"] == len(scenarios())
    assert doc["rank_deficient"] is False


def test_fitted_params_feed_predict(tmp_path, truth_file, sim_inputs, capsys):
    scen, paths = sim_inputs
    meas, out = tmp_path / "m.jsonl", tmp_path / "fit.json"
    main(["simulate", "--truth", str(truth_file), "--scenarios", str(scen), "--out", str(meas)])
    main(["fit", "--measurements", str(meas), "--paths", str(paths), "--fit-core", "--out", str(out)])
    capsys.readouterr()
    assert main(["predict", "--params", str(out), "--bytes", "11200000", "--i-lan", "1e6", "--i-sub", "6e6",
                 "--n-relays", "2"]) == 0
    # 2D/b_ds + 2D/b_c + D*1e6/1.12e14 + D*6e6/9e13 + 0.02 + 0.04 with D = 11.2e6
    expected = 0.01792 + 0.0224 + 0.1 + 11.2e6 * 6e6 / 9e13 + 0.02 + 0.04
    assert float(capsys.readouterr().out) == pytest.approx(expected * 1000, abs=1e-3)


def test_fit_requires_b_c(tmp_path, sim_inputs):
    _, paths = sim_inputs
    (tmp_path / "m.jsonl").write_text("")
    assert main(["fit", "--measurements", str(tmp_path / "m.jsonl"), "--paths", str(paths),
                 "--out", str(tmp_path / "f.json")]) == 1


def test_fit_empty_measurements_exit_3(tmp_path, sim_inputs):
    _, paths = sim_inputs
    (tmp_path / "m.jsonl").write_text("")
    assert main(["fit", "--measurements", str(tmp_path / "m.jsonl"), "--paths", str(paths), "--b-c", "1e9",
                 "--out", str(tmp_path / "f.json")]) == 3


def test_fit_missing_path_exit_2(tmp_path, truth_file, sim_inputs):
    scen, _ = sim_inputs
    meas = tmp_path / "m.jsonl"
    main(["simulate", "--truth", str(truth_file), "--scenarios", str(scen), "--out", str(meas)])
    write_paths({}, tmp_path / "empty.csv")
    assert main(["fit", "--measurements", str(meas), "--paths", str(tmp_path / "empty.csv"), "--b-c", "1e9",
                 "--out", str(tmp_path / "f.json")]) == 2


def _simulated(tmp_path, truth_file, sim_inputs, sigma="0.05"):
    scen, _ = sim_inputs
    meas = tmp_path / "m.jsonl"
    main(["simulate", "--truth", str(truth_file), "--scenarios", str(scen), "--noise-sigma", sigma,
          "--seed", "7", "--out", str(meas)])
    return meas


def test_simulate_deterministic(tmp_path, truth_file, sim_inputs):
    scen, _ = sim_inputs
    for name in ("a.jsonl", "b.jsonl"):
        main(["simulate", "--truth", str(truth_file), "--scenarios", str(scen), "--noise-sigma", "0.05",
              "--seed", "7", "--out", str(tmp_path / name)])
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_heatmap_outputs_byte_identical(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    outs = []
    for run in ("1", "2"):
        args = ["heatmap", "--measurements", str(meas), "--regions", str(regions_file),
                "--csv", str(tmp_path / f"h{run}.csv"), "--svg", str(tmp_path / f"h{run}.svg"),
                "--png", str(tmp_path / f"h{run}.png")]
        assert main(args) == 0
        outs.append([(tmp_path / f"h{run}.{ext}").read_bytes() for ext in ("csv", "svg", "png")])
    assert outs[0] == outs[1]
    header = outs[0][0].decode().splitlines()[0].split(",")
    assert header[1] == "gae-ashburn"


def test_heatmap_unknown_reference(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    assert main(["heatmap", "--measurements", str(meas), "--regions", str(regions_file), "--ref", "Atlantis",
                 "--csv", str(tmp_path / "h.csv")]) == 1


def test_heatmap_reference_from_regions(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    assert main(["heatmap", "--measurements", str(meas), "--regions", str(regions_file), "--ref", "Sydney",
                 "--csv", str(tmp_path / "h.csv")]) == 0
    assert (tmp_path / "h.csv").read_text().splitlines()[1].startswith("gae-sydney,")


def test_report_asymmetry(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    out = tmp_path / "asym.json"
    assert main(["report", "--measurements", str(meas), "--regions", str(regions_file), "--asymmetry",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["format_version"] == 1 and doc["kind"] == "asymmetry"
    n = len(REGIONS)
    assert len(doc["entries"]) == n * (n - 1) // 2
    assert set(doc["entries"][0]) == {"a", "b", "forward_ms", "backward_ms", "delta_ms", "relative"}


def test_report_linearity(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    out = tmp_path / "lin.json"
    assert main(["report", "--measurements", str(meas), "--regions", str(regions_file), "--linearity",
                 "--continent", "NA", "--out", str(out), "--figure", str(tmp_path / "lin.png")]) == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "linearity" and doc["continent"] == "NA"
    assert doc["n_points"] == 6
    assert (tmp_path / "lin.png").exists()


def test_report_linearity_degenerate(tmp_path, truth_file, sim_inputs, regions_file):
    meas = _simulated(tmp_path, truth_file, sim_inputs)
    assert main(["report", "--measurements", str(meas), "--regions", str(regions_file), "--linearity",
                 "--continent", "OC", "--out", str(tmp_path / "x.json")]) == 3


def test_report_requires_kind(tmp_path, regions_file):
    assert main(["report", "--measurements", "m", "--regions", str(regions_file), "--out", "x"]) == 1


def _regions_with(tmp_path, urls):
    regions = [dict(REGIONS[0])]
    for i, url in enumerate(urls):
        r = dict(REGIONS[i + 1])
        r["endpoint_url"] = url
        regions.append(r)
    path = tmp_path / "live.json"
    path.write_text(json.dumps(regions))
    return path


def test_measure_appends(tmp_path, throttled_server, unreachable_url):
    regions = _regions_with(tmp_path, [throttled_server.url, unreachable_url])
    out = tmp_path / "m.jsonl"
    args = ["measure", "--regions", str(regions), "--client-id", "gae-ashburn", "--reps", "2", "--warmup", "0",
            "--timeout", "2", "--max-retries", "0", "--out", str(out)]
    assert main(args) == 0
    assert main(args) == 0
    recs = load_records(out)
    assert [r.status for r in recs] == ["ok", "failed", "ok", "failed"]
    assert recs[0].server_id == "gae-montreal"


def test_measure_all_failed(tmp_path, unreachable_url):
    regions = _regions_with(tmp_path, [unreachable_url])
    assert main(["measure", "--regions", str(regions), "--client-id", "gae-ashburn", "--reps", "1",
                 "--warmup", "0", "--max-retries", "0", "--out", str(tmp_path / "m.jsonl")]) == 4


def test_measure_unknown_client(tmp_path, regions_file):
    assert main(["measure", "--regions", str(regions_file), "--client-id", "nobody",
                 "--out", str(tmp_path / "m.jsonl")]) == 1


def test_module_entry_point(tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"s_lan": None, "s_sub": None, "rho": 0, "c0": 0.5, "b_ds": None, "b_c": None}))
    proc = subprocess.run([sys.executable, "-m", "cloudlat", "predict", "--params", str(params), "--bytes", "5",
                           "--i-lan", "1", "--i-sub", "1", "--n-relays", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "500.000\n"
