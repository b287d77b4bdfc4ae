import json

import pytest

from auxcalib.default_scheme_config import DEFAULT_CONFIG_CONTENT
from auxcalib.errors import ConfigError
from auxcalib.load_config import LoadConfig, default_config_path
from auxcalib.run_config import RunConfig
from auxcalib.utils import derive_seed, str2bool


def _config_file(tmp_path, content, name="config.json"):
    path = tmp_path / name
    path.write_text(content if isinstance(content, str) else
                    json.dumps(content),
                    encoding="utf-8")
    return str(path)


def test_shipped_defaults_match_builtin_defaults():
    with open(default_config_path(), "r", encoding="utf-8") as file:
        assert json.load(file) == DEFAULT_CONFIG_CONTENT


def test_defaults_without_user_file():
    config = LoadConfig()
    assert config.get_config() == DEFAULT_CONFIG_CONTENT
    assert config.warnings == []
    assert config["kind"] == "ccac"


def test_missing_default_file_falls_back_to_builtin(tmp_path):
    config = LoadConfig(default_config_file=str(tmp_path / "nope.json"))
    assert config.get_config() == DEFAULT_CONFIG_CONTENT


def test_user_file_overrides_fields(tmp_path):
    path = _config_file(tmp_path, {"kind": "ts", "seed": 7, "bins": 10})
    config = LoadConfig(path)
    assert config["kind"] == "ts"
    assert config["seed"] == 7
    assert config["bins"] == 10
    assert config["epochs"] == DEFAULT_CONFIG_CONTENT["epochs"]


def test_invalid_and_unknown_fields_are_repaired(tmp_path):
    path = _config_file(tmp_path, {
        "kind": "platt",
        "bins": 0,
        "colour": "blue",
        "seed": 4
    })
    config = LoadConfig(path)
    assert config["kind"] == DEFAULT_CONFIG_CONTENT["kind"]
    assert config["bins"] == DEFAULT_CONFIG_CONTENT["bins"]
    assert config["seed"] == 4
    assert "colour" not in config.get_config()
    assert len(config.warnings) == 3


def test_manifest_replays_its_config(tmp_path):
    replayed = dict(DEFAULT_CONFIG_CONTENT, seed=12, kind="sb")
    path = _config_file(tmp_path, {
        "command": "fit",
        "config": replayed,
        "outputs": []
    })
    assert LoadConfig(path).get_config() == replayed


@pytest.mark.parametrize("content", ["{broken", "[1, 2]"])
def test_unreadable_user_file(tmp_path, content):
    with pytest.raises(ConfigError):
        LoadConfig(_config_file(tmp_path, content))


def test_missing_user_file(tmp_path):
    with pytest.raises(ConfigError):
        LoadConfig(str(tmp_path / "missing.json"))


def test_set_config_value():
    config = LoadConfig()
    config["seed"] = 5
    assert config["seed"] == 5
    with pytest.raises(ConfigError):
        config.set_config_value("seed", -1)
    with pytest.raises(ConfigError):
        config.set_config_value("colour", "blue")


def test_run_config_views():
    config = LoadConfig()
    config["seed"] = 3
    run_cfg = RunConfig.from_load_config(config)
    assert run_cfg.hyper_grid().points()[0] == (0.0, 0.0)
    assert len(run_cfg.hyper_grid().points()) == 16
    assert run_cfg.aux_hidden_layers is None
    assert run_cfg.split_spec().seed == derive_seed(3, "split")
    assert run_cfg.synth_config().seed == derive_seed(3, "synth")
    assert run_cfg.train_config("ccac").seed == derive_seed(3, "ccac")
    assert run_cfg.transfer_train_config().epochs == 200
    assert run_cfg.to_dict() == config.get_config()


def test_run_config_check(tmp_path):
    config = LoadConfig()
    config["dataset"] = str(tmp_path / "missing.csv")
    run_cfg = RunConfig.from_load_config(config)
    run_cfg.check("synth")
    with pytest.raises(ConfigError):
        run_cfg.check("fit")
    config["dataset"] = None
    with pytest.raises(ConfigError, match="requires --dataset"):
        RunConfig.from_load_config(config).check("compare")


def test_run_config_rejects_split_not_summing_to_one():
    config = LoadConfig()
    config["split"] = {"train": 0.5, "val": 0.2, "test": 0.2}
    with pytest.raises(ConfigError):
        RunConfig.from_load_config(config).check("synth")


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, "split") == derive_seed(0, "split")
    assert derive_seed(0, "split") != derive_seed(0, "synth")
    assert derive_seed(0, "ccac/0") != derive_seed(1, "ccac/0")
    assert 0 <= derive_seed(123, "x") < 2**32


def test_str2bool():
    assert str2bool("yes") is True
    assert str2bool("0") is False
    assert str2bool(True) is True
