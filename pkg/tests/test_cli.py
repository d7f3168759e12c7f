import json

import pytest

from rkn.cli import main
from rkn.config import ConfigError, RunConfig


def test_kernel_dump(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kernel", "--B", "7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,G,G_fd_prime"
    assert lines[1].split(",")[:2] == ["0", "7"]
    assert len(lines) == 1002


def test_target_dump(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["target", "--B", "7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,h,abs_h_prime" and len(lines) - 1 == 1001


def test_missing_output_dir(tmp_path):
    assert main(["kernel", "--B", "7", "--out-dir", str(tmp_path / "nope")]) == 3


def test_bad_betas_is_config_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"provisional_betas": [0.5, 1.75, 2.0]}))
    assert main(["verify", "--config", str(cfg)]) == 2


def test_unknown_key_is_config_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["kernel", "--config", str(cfg)]) == 2


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("RKN_OUTPUT_DIR", str(tmp_path / "auto"))
    assert main(["target", "--B", "7"]) == 0
    assert (tmp_path / "auto" / "target_B7.csv").exists()


def test_verify_json(capsys):
    assert main(["verify", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["passed"] and {c["name"] for c in data["checks"]} >= {"mc_variance", "aligned_gap"}


def test_separation_outputs(tmp_path):
    assert main(["separation", "--B", "7", "15", "--trials", "3", "--n-cap", "32", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "separation.csv").read_text().splitlines()[0] == "B,m_star,delta,N_deep,N_shallow,ratio,censored"
    data = json.loads((tmp_path / "separation.json").read_text())
    assert data["fitted_exponent"] is None
    # the config echo reloads to the same config
    assert RunConfig.from_dict(data["config"]).to_dict() == data["config"]


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(eps=0)
    with pytest.raises(ConfigError):
        RunConfig(B_list=[])
    with pytest.raises(ConfigError):
        RunConfig(dim=0)
    with pytest.raises(ConfigError):
        RunConfig(mode="general", kernel="relu")
    assert RunConfig().replace(eps=0.1, seed=None).eps == 0.1
