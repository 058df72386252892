import csv
import json
from pathlib import Path

import pytest

from rtnlab.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE, main
from rtnlab.experiments import ConfigError, ExperimentConfig, chain_graph, star_graph

OUTPUTS = ("results.json", "moments.csv", "histogram.csv", "report.txt")


@pytest.fixture
def graphs(tmp_path):
    (tmp_path / "chain.json").write_text(chain_graph([8, 64, 8]).to_json())
    (tmp_path / "chain393.json").write_text(chain_graph([3, 9, 3]).to_json())
    (tmp_path / "star.json").write_text(star_graph(4).to_json())
    return tmp_path


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows(path):
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_two_cut_run_writes_all_files(graphs):
    cfg = write(graphs, "two.toml", 'kind = "two-cut"\ngraph = "chain.json"\nregion = ["a"]\ntrials = 4\nkmax = 3\nseed = 2\n')
    out = graphs / "out"
    code = main(["run", "--config", cfg, "--out", str(out)])
    assert code in (EXIT_OK, EXIT_TOLERANCE)
    for name in OUTPUTS:
        text = (out / name).read_text()
        assert '"seed": 2' in text
    table = rows(out / "moments.csv")
    assert [r["k"] for r in table] == ["1", "2", "3"]
    assert [r["target_exact"] for r in table] == ["1", "2", "5"]
    assert all(r["measured"] for r in table)
    assert len(rows(out / "histogram.csv")) == 1000
    res = json.loads((out / "results.json").read_text())
    assert res["extra"]["flag"] == "exactly-two-nonintersecting"
    assert all("measured" in c and "target" in c for c in res["comparisons"])


def test_determinism_across_runs_and_threads(graphs):
    cfg = write(graphs, "two.toml", 'kind = "two-cut"\ngraph = "chain.json"\ntrials = 6\nkmax = 3\n')
    outs = []
    for i, threads in enumerate(["1", "1", "3"]):
        out = graphs / f"o{i}"
        main(["run", "--config", cfg, "--out", str(out), "--threads", threads, "--seed", "77"])
        outs.append(out)
    for name in OUTPUTS:
        first = (outs[0] / name).read_bytes()
        assert all((o / name).read_bytes() == first for o in outs[1:])


def test_seed_changes_results(graphs):
    cfg = write(graphs, "two.toml", 'kind = "two-cut"\ngraph = "chain.json"\ntrials = 3\nkmax = 2\n')
    main(["run", "--config", cfg, "--out", str(graphs / "s1"), "--seed", "1"])
    main(["run", "--config", cfg, "--out", str(graphs / "s2"), "--seed", "2"])
    assert rows(graphs / "s1/moments.csv")[1]["measured"] != rows(graphs / "s2/moments.csv")[1]["measured"]


def test_metric_check(tmp_path):
    code = main(["metric-check", "--kmax", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = (tmp_path / "report.txt").read_text()
    assert report.count("violations=0") == 3
    assert "overall: PASS" in report


def test_predict_mp_catalan(tmp_path):
    cfg = write(tmp_path, "mp.toml", 'kind = "mp"\nkmax = 10\n')
    assert main(["predict", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    vals = [r["target_exact"] for r in rows(tmp_path / "o/moments.csv")]
    assert vals == ["1", "2", "5", "14", "42", "132", "429", "1430", "4862", "16796"]


def test_predict_one_cut_flat(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(chain_graph([4, 64]).to_json())
    cfg = write(tmp_path, "c.json", json.dumps({"kind": "one-cut", "graph": "g.json", "kmax": 5}))
    assert main(["predict", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    assert [r["target_exact"] for r in rows(tmp_path / "o/moments.csv")] == ["1"] * 5


def test_predict_min_push_cdf(tmp_path):
    cfg = write(tmp_path, "m.toml", 'kind = "min-push"\nn = 6\n')
    assert main(["predict", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    hist = rows(tmp_path / "o/histogram.csv")
    assert len(hist) == 1000
    vals = [float(r["target_position"]) for r in hist]
    assert vals == sorted(vals)


def test_oracle_subcommand(graphs):
    cfg = write(graphs, "o.toml", 'kind = "oracle-check"\ngraph = "chain393.json"\nks = [2, 3]\n')
    assert main(["oracle", "--config", cfg, "--out", str(graphs / "o")]) == EXIT_OK
    res = json.loads((graphs / "o/results.json").read_text())
    assert res["extra"]["replica_exact"] == {"2": "64/81", "3": "1888/2187"}


def test_dry_run(graphs, capsys):
    cfg = write(graphs, "two.toml", 'kind = "two-cut"\ngraph = "chain.json"\n')
    assert main(["run", "--config", cfg, "--dry-run", "--out", str(graphs / "dry")]) == EXIT_OK
    assert not (graphs / "dry").exists()


@pytest.mark.parametrize(
    "text",
    [
        'kind = "two-cut"\ngraph = "missing.json"\n',
        'kind = "nonsense"\n',
        'kind = "one-cut"\n',
        'kind = "two-cut"\ngraph = "chain.json"\nbogus = 1\n',
        'kind = "two-cut"\ntrials = \n',
        'kind = "two-cut"\ngraph = "chain.json"\ntrials = 0\n',
    ],
)
def test_config_errors_exit_2(graphs, text):
    cfg = write(graphs, "bad.toml", text)
    assert main(["run", "--config", cfg, "--out", str(graphs / "bad")]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG


def test_budget_exit_3(graphs, monkeypatch):
    cfg = write(graphs, "o.toml", 'kind = "oracle-check"\ngraph = "chain393.json"\nks = [3]\n')
    monkeypatch.setenv("RTNLAB_BUDGET", "10")
    assert main(["oracle", "--config", cfg, "--out", str(graphs / "o")]) == EXIT_BUDGET


def test_tolerance_failure_exit_1(graphs):
    # a 4-dim star is far from its limit: the signed odd moments are clearly nonzero
    cfg = write(
        graphs,
        "n.toml",
        'kind = "negativity"\ngraph = "star.json"\nregion = ["A"]\nregion_b = ["B"]\nregion_c = ["C"]\ntrials = 20\nkmax = 2\n',
    )
    assert main(["run", "--config", cfg, "--out", str(graphs / "n")]) == EXIT_TOLERANCE
    assert "FAIL" in (graphs / "n/report.txt").read_text()


def test_config_dataclass_round_trip():
    cfg = ExperimentConfig.from_dict({"kind": "metric-check", "degree": 3})
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"degree": 3})


def test_d_sweep(tmp_path):
    (tmp_path / "g.json").write_text(chain_graph([1, 2, 1]).to_json())
    cfg = write(tmp_path, "s.toml", 'kind = "two-cut"\ngraph = "g.json"\nd_sweep = [2, 4]\ntrials = 3\nkmax = 2\n')
    main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
    table = rows(tmp_path / "o/moments.csv")
    assert [(r["D"], r["k"]) for r in table] == [("2", "1"), ("2", "2"), ("4", "1"), ("4", "2")]
    bad = write(tmp_path, "b.toml", 'kind = "min-push"\nd_sweep = [4]\n')
    assert main(["run", "--config", bad]) == EXIT_CONFIG
