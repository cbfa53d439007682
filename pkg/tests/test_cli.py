"""Command line behavior: parsing, reports, manifests, determinism."""

import hashlib
import json

import pytest

from liouconv import cli, zeros


@pytest.fixture(scope="module")
def cache80(tmp_path_factory):
    """A small enriched cache on disk for verify runs."""
    path = tmp_path_factory.mktemp("zcache") / "z80.npz"
    zset = zeros.enrich(zeros.bundled_ordinates(80))
    zeros.save_cache(zset, path)
    return str(path)


def _summary_block(text):
    head, _, tail = text.partition("\n\nkey,value\n")
    out = {}
    for line in tail.strip().splitlines():
        key, _, value = line.partition(",")
        out[key] = value
    return head, out


def test_usage_errors_exit_2(tmp_path, cache80):
    assert cli.main(["verify", "dirichlet", "--limit", "100"]) == 2
    assert cli.main(["verify", "L", "--zeros", cache80,
                     "--count", "5", "--T", "30"]) == 2
    assert cli.main(["verify", "L", "--zeros", cache80,
                     "--samples", "log:10:0:100"]) == 2
    assert cli.main(["verify", "weighted", "--weight", "3:2:10"]) == 2
    assert cli.main(["verify", "dirichlet", "--zeros", cache80,
                     "--s", "0.5"]) == 2
    assert cli.main(["verify", "exponential", "--zeros", cache80,
                     "--limit", "100", "--y", "0.01"]) == 2
    assert cli.main(["verify", "weighted", "--weight", "0:2:600",
                     "--limit", "500"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("volume = 11\n")
    assert cli.main(["verify", "identity", "--config", str(bad)]) == 2


def test_sample_and_value_parsers():
    assert cli._parse_samples("log:5:10:100") == ("log", 5, 10.0, 100.0)
    assert cli._parse_samples("linear:3:0:9") == ("linear", 3, 0.0, 9.0)
    assert cli._parse_complex("6") == 6.0 + 0j
    assert cli._parse_complex("6,2") == 6.0 + 2.0j
    assert cli._parse_weight("0:2.5:40") == (0.0, 2.5, 40.0, 2)
    assert cli._parse_weight("1:2:30:4") == (1.0, 2.0, 30.0, 4)
    with pytest.raises(cli.UsageError):
        cli._parse_samples("geom:5:10:100")
    with pytest.raises(cli.UsageError):
        cli._parse_complex("1,2,3")


def test_identity_run_report_structure(tmp_path):
    report = tmp_path / "identity.csv"
    code = cli.main(["verify", "identity", "--trials", "6",
                     "--limit", "1024", "--output", str(report)])
    assert code == 0
    head, summary = _summary_block(report.read_text())
    rows = head.strip().splitlines()
    assert rows[0].split(",")[:4] == ["trial", "kind", "d", "a"]
    assert len(rows) == 7
    assert summary["identity_ok"] == "true"
    assert float(summary["max_rel_residual"]) < 1e-8


def test_manifest_contents(tmp_path, cache80):
    report = tmp_path / "M.csv"
    code = cli.main(["verify", "M", "--limit", "1500", "--zeros", cache80,
                     "--samples", "linear:4:100:1500",
                     "--output", str(report)])
    assert code == 0
    manifest = json.loads((tmp_path / "M.csv.manifest.json").read_text())
    assert manifest["command"] == "verify"
    assert manifest["target"] == "M"
    assert manifest["config"]["limit"] == 1500
    assert manifest["config"]["workers"] == 1
    want_input = hashlib.sha256(open(cache80, "rb").read()).hexdigest()
    assert manifest["inputs"][cache80] == want_input
    want_report = hashlib.sha256(report.read_bytes()).hexdigest()
    assert manifest["report"]["sha256"] == want_report
    assert "numpy" in manifest["versions"]


def test_report_bytes_worker_invariant(tmp_path, cache80):
    args = ["verify", "cesaro", "--limit", "4000", "--zeros", cache80,
            "--samples", "log:5:400:4000"]
    r1 = tmp_path / "w1.csv"
    r2 = tmp_path / "w2.csv"
    assert cli.main(args + ["--workers", "1", "--output", str(r1)]) == 0
    assert cli.main(args + ["--workers", "2", "--output", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()


def test_json_report_is_column_oriented(tmp_path, cache80):
    report = tmp_path / "L.json"
    code = cli.main(["verify", "L", "--limit", "800", "--zeros", cache80,
                     "--samples", "log:6:10:800", "--format", "json",
                     "--output", str(report)])
    assert code == 0
    doc = json.loads(report.read_text())
    cols = doc["columns"]
    lengths = {len(v) for v in cols.values()}
    assert lengths == {6}
    assert doc["summary"]["rows"] == 6
    assert "median_residual" in doc["summary"]


def test_zeros_enrich_and_reuse(tmp_path):
    ords = zeros.bundled_ordinates(40)
    src = tmp_path / "ordinates.txt"
    src.write_text("".join(f"{k + 1} {g:.13f}\n" for k, g in enumerate(ords)))
    cache = tmp_path / "cache.npz"
    assert cli.main(["zeros-enrich", "--zeros", str(src),
                     "--count", "30", "--output", str(cache)]) == 0
    back = zeros.load_cache(cache)
    assert len(back) == 30
    report = tmp_path / "L.csv"
    assert cli.main(["verify", "L", "--limit", "500", "--zeros", str(cache),
                     "--samples", "linear:3:50:500",
                     "--output", str(report)]) == 0


def test_config_file_precedence(tmp_path, cache80):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("limit = 900\ntrials = 3\n# comment\n")
    report = tmp_path / "id.csv"
    assert cli.main(["verify", "identity", "--config", str(cfgfile),
                     "--trials", "2", "--output", str(report)]) == 0
    manifest = json.loads((tmp_path / "id.csv.manifest.json").read_text())
    assert manifest["config"]["limit"] == 900     # from the file
    assert manifest["config"]["trials"] == 2      # flag wins


def test_bench_small_exits_clean(tmp_path):
    report = tmp_path / "bench.json"
    code = cli.main(["bench", "--limit", "512", "--format", "json",
                     "--output", str(report)])
    assert code == 0
    manifest = json.loads((tmp_path / "bench.json.manifest.json").read_text())
    res = manifest["results"]
    assert res["d3_fft_sha256"] == res["d3_naive_sha256"]
    assert res["convolve_d2_fft_seconds"] > 0.0


def test_sieve_and_convolve_artifacts(tmp_path):
    table_path = tmp_path / "table.npz"
    assert cli.main(["sieve", "--limit", "2000",
                     "--output", str(table_path)]) == 0
    assert table_path.exists()
    series_path = tmp_path / "series.csv"
    assert cli.main(["convolve", "--limit", "1000", "--d", "3",
                     "--output", str(series_path)]) == 0
    header = series_path.read_text().splitlines()[0]
    assert header == "n,value"
