"""Command-line interface: exit codes, schema errors, artifact stability."""

import hashlib
import json

import pytest

from kimura import cli


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _base(task, out, operator=None, params=None, seed=0):
    cfg = {"version": "1", "task": task, "seed": seed, "out": str(out)}
    if operator is not None:
        cfg["operator"] = operator
    if params is not None:
        cfg["params"] = params
    return cfg


MODEL0 = {"preset": "model1d", "params": {"b": 0.0}}
WF = {"preset": "wright-fisher", "params": {"N": 1, "b": [0.0, 0.0]}}


def _summary(out):
    return json.loads((out / "summary.json").read_text())


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_check_clean_operator_exits_zero(tmp_path):
    out = tmp_path / "out"
    cfg = _base("check", out, operator=WF)
    assert cli.main(["check", "--config", _write(tmp_path, cfg)]) == 0
    doc = _summary(out)
    assert doc["status"] == "ok"
    assert doc["schema_version"] == "1"
    assert doc["results"]["cleanness"] == "ok"
    assert sorted(doc["results"]["tangent"]) == [1, 2]


def test_check_nonclean_operator_exits_two(tmp_path):
    out = tmp_path / "out"
    cfg = _base("check", out, operator={"preset": "remark-counterexample", "params": {}})
    assert cli.main(["check", "--config", _write(tmp_path, cfg)]) == 2
    doc = _summary(out)
    assert doc["status"] == "assumption-failure"
    assert doc["results"]["cleanness"] == "violated"
    wit = doc["results"]["witness"]
    assert wit["points"], "witness points must be recorded"


def test_missing_required_param_exits_three(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _base(
        "decompose",
        out,
        operator=WF,
        params={"p0": [0.3], "dt": 1e-3, "n_paths": 50},  # t missing
    )
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg)]) == 3
    assert "params.t" in capsys.readouterr().err
    assert not (out / "summary.json").exists()


def test_unknown_key_exits_three_with_dotted_path(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _base(
        "decompose",
        out,
        operator=WF,
        params={"p0": [0.3], "dt": 1e-3, "n_path": 50, "t": 1.0},
    )
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg)]) == 3
    assert "params.n_path" in capsys.readouterr().err


def test_wrong_schema_version_exits_three(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _base("check", out, operator=WF)
    cfg["version"] = "2"
    assert cli.main(["check", "--config", _write(tmp_path, cfg)]) == 3
    assert "version" in capsys.readouterr().err


def test_task_mismatch_exits_three(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _base("simulate", out, operator=WF, params={})
    assert cli.main(["check", "--config", _write(tmp_path, cfg)]) == 3
    assert "task" in capsys.readouterr().err


def test_runtime_error_exits_one(tmp_path):
    out = tmp_path / "out"
    cfg = _base(
        "decompose",
        out,
        operator=MODEL0,
        params={"p0": [0.3, 0.4], "dt": 1e-3, "n_paths": 20, "t": 0.1},  # 2-D start
    )
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg)]) == 1
    assert _summary(out)["status"] == "error"


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _md5(path):
    return hashlib.md5(path.read_bytes()).hexdigest()


def test_decompose_artifacts_are_byte_stable(tmp_path):
    params = {"p0": [0.3], "dt": 1e-3, "n_paths": 400, "t": 1.0}
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    cfg_a = _base("decompose", out_a, operator=WF, params=params)
    cfg_b = _base("decompose", out_b, operator=WF, params=params)
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg_a, "a.json")]) == 0
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg_b, "b.json")]) == 0
    assert _md5(out_a / "masses.csv") == _md5(out_b / "masses.csv")


def test_worker_count_is_invisible_in_artifacts(tmp_path):
    params = {"p0": [0.3], "dt": 1e-3, "n_paths": 400, "t": 1.0}
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    cfg_a = _base("decompose", out_a, operator=WF, params=params)
    cfg_b = _base("decompose", out_b, operator=WF, params=params)
    cfg_b["workers"] = 3
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg_a, "a.json")]) == 0
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg_b, "b.json")]) == 0
    assert _md5(out_a / "masses.csv") == _md5(out_b / "masses.csv")


def test_decompose_reports_stderr_for_every_mass(tmp_path):
    out = tmp_path / "out"
    params = {"p0": [0.3], "dt": 1e-3, "n_paths": 500, "t": 1.0}
    cfg = _base("decompose", out, operator=WF, params=params)
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg)]) == 0
    lines = (out / "masses.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert "stderr" in header
    assert len(lines) >= 3


def test_seed_flag_overrides_config(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    params = {"p0": [0.3], "dt": 1e-3, "n_paths": 200, "t": 0.5}
    cfg_a = _base("decompose", out_a, operator=WF, params=params, seed=3)
    cfg_b = _base("decompose", out_b, operator=WF, params=params, seed=3)
    assert cli.main(["decompose", "--config", _write(tmp_path, cfg_a, "a.json")]) == 0
    rc = cli.main(
        ["decompose", "--config", _write(tmp_path, cfg_b, "b.json"), "--seed", "4"]
    )
    assert rc == 0
    da, db = _summary(out_a), _summary(out_b)
    assert da["seed"] == 3 and db["seed"] == 4
    assert db["config"]["seed"] == 3  # the echo preserves the file
    assert _md5(out_a / "masses.csv") != _md5(out_b / "masses.csv")


def test_barriers_task_passes(tmp_path):
    out = tmp_path / "out"
    cfg = _base("barriers", out, params={})
    assert cli.main(["barriers", "--config", _write(tmp_path, cfg)]) == 0
    rows = (out / "barriers.csv").read_text().splitlines()
    assert len(rows) == 4  # header + w2 + w1 + w_reg
    assert all("pass" in r for r in rows[1:])


def test_kernel_task_artifacts(tmp_path):
    out = tmp_path / "out"
    params = {"p0": 0.3, "T": 0.5, "dt": 1e-3, "M": 100}
    cfg = _base("kernel", out, operator=WF, params=params)
    assert cli.main(["kernel", "--config", _write(tmp_path, cfg)]) == 0
    assert (out / "kernel.csv").exists()
    assert (out / "survival.csv").exists()
    doc = _summary(out)
    assert 0.0 < doc["results"]["survival_final"] < 1.0
