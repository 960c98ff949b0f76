import json
from pathlib import Path

import pytest

from kausal.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main
from kausal.config import load_config, parse_config
from kausal.errors import GoldenMismatch, InvalidConfig, UnknownExperiment
from kausal.experiments import EXPERIMENTS, REPORT_FILE, run, verify_golden

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.conf"))


def test_every_experiment_registered():
    assert set(EXPERIMENTS) == {
        "pr-inherit", "chained-bell", "magic-square", "parallel-value", "poset-build", "triviality", "fuel",
        "bennett", "structure-fn", "second-law", "mixing-demo", "process-check", "process-run", "census"}


def test_parse_sections_and_types():
    cfg = parse_config("experiment = fuel\nseed = 5\n[params]\nn = 1e4\nT = 10.5\n"
                       "[thresholds]\neps_zero = 0.02\nn_min = 1024\n[output]\ndir = x\n")
    assert cfg.seed == 5 and cfg.params["n"] == 10_000 and cfg.params["T"] == 10.5
    assert cfg.thresholds.eps_zero == 0.02 and cfg.thresholds.n_min == 1024
    assert cfg.out_dir == "x"
    assert cfg.params["zeros_lower"] == 0.98  # default filled in


@pytest.mark.parametrize("text", [
    "experiment = fuel\nwhat = 1\n",
    "experiment = fuel\n[params]\nbogus = 1\n",
    "experiment = fuel\n[thresholds]\neps_nothing = 1\n",
    "experiment = fuel\n[extra]\na = 1\n",
    "experiment = fuel\n[params]\nn = 1.5\n",
    "experiment = fuel\n[params]\nn = 5\nn = 6\n",
    "experiment = fuel\n[thresholds]\neps_zero = 0.95\n",
    "experiment = fuel\ncompressor = gzip9\n",
    "experiment = fuel\nseed = -1\n",
    "seed = 1\n",
    "experiment = census\n[params]\nk = 4\n",
    "experiment = process-check\n[params]\nrelation = no_such_relation\n",
    "experiment = parallel-value\n[params]\nrounds = 3\n",
])
def test_invalid_configs(text):
    with pytest.raises(InvalidConfig):
        parse_config(text)


def test_unknown_experiment():
    with pytest.raises(UnknownExperiment):
        parse_config("experiment = nope\n")


def test_config_hash_ignores_output_and_formatting():
    a = parse_config("experiment = fuel\n[params]\nn = 100\n[output]\ndir = a\n")
    b = parse_config("# comment\nexperiment=fuel\n\n[params]\nn=100 # inline\n[output]\ndir = b\n")
    c = parse_config("experiment = fuel\n[params]\nn = 101\n")
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_relation_file_relative_to_config(tmp_path):
    from kausal.process import one_way_channel

    one_way_channel().to_json(tmp_path / "mine.json")
    (tmp_path / "c.conf").write_text("experiment = process-check\n[params]\nrelation = mine.json\n")
    cfg = load_config(tmp_path / "c.conf")
    rep = run(cfg)
    assert any(r.get("verdict") == "consistent" for r in rep.records)


def test_cli_pass_and_outputs(tmp_path):
    out = tmp_path / "o"
    rc = main(["process-check", "--config", str(ROOT / "configs/process-check-two-way.conf"), "--out", str(out)])
    assert rc == EXIT_PASS
    lines = [json.loads(x) for x in (out / REPORT_FILE).read_text().splitlines()]
    assert lines[0]["record"] == "run" and lines[0]["version"]
    assert lines[-1] == {"record": "summary", "passed": True, "failed_checks": []}
    oracle = [x for x in lines if x.get("name") == "consistency"][0]
    assert oracle["verdict"] == "inconsistent" and ["id", "neg"] in oracle["failing_combos"]
    assert (out / "combos.csv").exists() and (out / "timings.json").exists()


def test_cli_verdict_fail_exit_code(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("experiment = process-check\n[params]\nrelation = two_way\nexpect = consistent\n")
    assert main(["process-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_FAIL


def test_cli_error_exit_codes(tmp_path, capsys):
    assert main(["nope"]) == EXIT_ERROR
    assert main(["fuel", "--config", str(tmp_path / "missing.conf")]) == EXIT_ERROR
    assert main(["census", "--config", str(ROOT / "configs/fuel.conf")]) == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_threads_env_overrides(tmp_path, monkeypatch):
    out = tmp_path / "o"
    monkeypatch.setenv("KAUSAL_THREADS", "3")
    assert main(["census", "--config", str(ROOT / "configs/census-k2.conf"), "--out", str(out), "--threads", "1",
                 "-q"]) == EXIT_PASS
    assert json.loads((out / "timings.json").read_text())["threads"] == 3
    monkeypatch.setenv("KAUSAL_THREADS", "0")
    assert main(["census", "--config", str(ROOT / "configs/census-k2.conf"), "--out", str(out)]) == EXIT_ERROR


def test_seed_override_changes_hash(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    conf = str(ROOT / "configs/poset-build.conf")
    main(["poset-build", "--config", conf, "--out", str(a), "-q"])
    main(["poset-build", "--config", conf, "--out", str(b), "--seed", "99", "-q"])
    ha = json.loads((a / REPORT_FILE).read_text().splitlines()[0])["config_hash"]
    hb = json.loads((b / REPORT_FILE).read_text().splitlines()[0])["config_hash"]
    assert ha != hb


def test_rerun_is_byte_identical(tmp_path):
    conf = str(ROOT / "configs/triviality.conf")
    main(["triviality", "--config", conf, "--out", str(tmp_path / "a"), "-q"])
    main(["triviality", "--config", conf, "--out", str(tmp_path / "b"), "-q"])
    assert (tmp_path / "a" / REPORT_FILE).read_bytes() == (tmp_path / "b" / REPORT_FILE).read_bytes()
    assert (tmp_path / "a" / "sets.csv").read_bytes() == (tmp_path / "b" / "sets.csv").read_bytes()


@pytest.mark.parametrize("conf", CONFIGS, ids=lambda p: p.stem)
def test_goldens(conf, tmp_path):
    cfg = load_config(conf)
    run(cfg).write(tmp_path)
    verify_golden(tmp_path, ROOT / "goldens" / conf.stem)


def test_golden_mismatch_names_field(tmp_path):
    conf = (ROOT / "configs/process-check-cyclic.conf").read_text() + "\n[thresholds]\neps_zero = 0.04\n"
    cfg = parse_config(conf)
    run(cfg).write(tmp_path)
    with pytest.raises(GoldenMismatch) as exc:
        verify_golden(tmp_path, ROOT / "goldens/process-check-cyclic")
    assert "config.thresholds.eps_zero: 0.05 -> 0.04" in str(exc.value)
    assert exc.value.diff.startswith("---")


def test_missing_golden_is_an_error(tmp_path):
    cfg = load_config(ROOT / "configs/parallel-value-r1.conf")
    run(cfg).write(tmp_path)
    with pytest.raises(GoldenMismatch, match="missing golden"):
        verify_golden(tmp_path, tmp_path / "none")
    assert main(["verify-golden", str(tmp_path), "--golden", str(tmp_path / "none")]) == EXIT_ERROR
    assert main(["verify-golden", str(tmp_path), "--golden", str(ROOT / "goldens/parallel-value-r1")]) == EXIT_PASS


def test_list(capsys):
    assert main(["list"]) == EXIT_PASS
    assert "census" in capsys.readouterr().out


def test_small_floats_survive_the_report():
    rep = run(parse_config("experiment = fuel\n[params]\nn = 10000\n"))
    line = [json.loads(x) for x in rep.lines() if '"fuel_zeros"' in x][0]
    assert line["lower_bound_joules"] > 0
    assert line["lower_bound_joules"] == pytest.approx(line["lower_bound_bits"] * line["work_per_bit_joules"])
