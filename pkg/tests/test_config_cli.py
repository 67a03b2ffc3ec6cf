import csv
import json
from collections import defaultdict

import numpy as np
import pytest

from eswm.cli import main
from eswm.config import ExperimentConfig, dump_config, parse_config
from eswm.model import ConfigError
from eswm.output import EPOCH_COLUMNS, SUMMARY_COLUMNS


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_empty_file_gives_defaults(tmp_path):
    assert parse_config(write(tmp_path, "")) == ExperimentConfig()
    assert parse_config() == ExperimentConfig()


def test_negative_capacity_names_field(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write(tmp_path, "population:\n  capacity: -1\n"))
    assert err.value.field == "population.capacity"
    assert "11.a" in str(err.value)


def test_flag_overrides_file(tmp_path):
    path = write(tmp_path, "seed: 7\nepochs: 3\n")
    cfg = parse_config(path, {"seed": 42, "epochs": None})
    assert cfg.seed == 42 and cfg.epochs == 3


def test_dotted_override(tmp_path):
    cfg = parse_config(None, {"population.capacity": 5})
    assert cfg.capacity == 5


@pytest.mark.parametrize("text, field", [
    ("sed: 3\n", "sed"),
    ("population:\n  requestors: 3\n", "population.requestors"),
    ("policy:\n  requester_share: 0\n", "policy"),
    ("mode: dynamic\n", "mode"),
    ("epochs: 0\n", "epochs"),
    ("reselection:\n  floor: 0\n", "reselection.floor"),
    ("population: [1, 2]\n", "population"),
    ("- 1\n- 2\n", "config"),
    ("seed: [unclosed\n", "config"),
])
def test_bad_config_errors(tmp_path, text, field):
    with pytest.raises(ConfigError) as err:
        parse_config(write(tmp_path, text))
    assert err.value.field == field


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.yaml")


def test_round_trip(tmp_path):
    cfg = parse_config(None, {"seed": 5, "mode": "static", "population.capacity": 7,
                              "policy.average_over": "winners", "reselection.exponent": 1.0})
    assert parse_config(write(tmp_path, dump_config(cfg))) == cfg


def run_cli(tmp_path, *extra, name="out"):
    out = tmp_path / name
    code = main(["run", "--epochs", "1", "--replications", "1", "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cli_run_writes_files(tmp_path):
    code, out = run_cli(tmp_path, "--seed", "3")
    assert code == 0
    rows = read_csv(out / "epochs.csv")
    assert tuple(rows[0]) == EPOCH_COLUMNS
    assert len(rows) == 3
    assert tuple(read_csv(out / "summary.csv")[0]) == SUMMARY_COLUMNS
    meta = json.loads((out / "run.json").read_text())
    assert meta["seed"] == 3 and meta["config"]["epochs"] == 1
    assert "version" in meta and "oracle" not in meta


def test_cli_golden_headers(tmp_path):
    _, out = run_cli(tmp_path)
    header = (out / "epochs.csv").read_text().splitlines()[0]
    assert header == ("replication,epoch,mechanism,requesters,providers,nsw,esw,realized_sw,"
                      "platform_utility,avg_requester_utility,avg_provider_utility,tasks_served")
    assert (out / "summary.csv").read_text().splitlines()[0] == \
        "epoch,mechanism,metric,mean,half_width,replications"


def test_cli_rerun_byte_identical(tmp_path):
    _, a = run_cli(tmp_path, "--seed", "11", "--epochs", "3", "--replications", "2", name="a")
    _, b = run_cli(tmp_path, "--seed", "11", "--epochs", "3", "--replications", "2", name="b")
    for f in ("epochs.csv", "summary.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    meta_a, meta_b = (json.loads((d / "run.json").read_text()) for d in (a, b))
    # only the output directory differs
    assert meta_a["config"].pop("out") != meta_b["config"].pop("out")
    assert meta_a == meta_b


def test_summary_recomputed_from_epochs(tmp_path):
    _, out = run_cli(tmp_path, "--epochs", "3", "--replications", "4")
    header, *rows = read_csv(out / "epochs.csv")
    values = defaultdict(list)
    for row in rows:
        rec = dict(zip(header, row))
        for metric in header[3:]:
            values[(int(rec["epoch"]), rec["mechanism"], metric)].append(float(rec[metric]))
    header, *rows = read_csv(out / "summary.csv")
    assert len(rows) == len(values)
    for row in rows:
        rec = dict(zip(header, row))
        vals = np.array(values[(int(rec["epoch"]), rec["mechanism"], rec["metric"])])
        assert float(rec["mean"]) == pytest.approx(vals.mean())
        assert float(rec["half_width"]) == pytest.approx(1.959963984540054 * vals.std(ddof=1) / 2)
        assert int(rec["replications"]) == 4


def test_cli_oracle_flag(tmp_path, capsys):
    code, out = run_cli(tmp_path, "--oracle", "--mode", "static")
    assert code == 0
    assert json.loads((out / "run.json").read_text())["oracle"]["violations"] == 0
    assert "oracle: checked" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    bad = write(tmp_path, "population:\n  capacity: -1\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["run", "--mode", "dynamic"])
    assert exc.value.code == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--epochs", "1", "--replications", "1", "--out", str(blocker / "sub")]) == 2


def test_cli_verify(capsys):
    assert main(["verify", "--instances", "60"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 6
