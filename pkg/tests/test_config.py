import pytest

from havokts.config import PipelineConfig, from_dict, load_config
from havokts.errors import ConfigError


def test_defaults_and_lambda_alias():
    cfg = from_dict({"model": {"lambda": 0.5, "r": "energy:0.95"}})
    assert cfg.model.lam == 0.5 and cfg.model.r == "energy:0.95"
    assert cfg.to_dict()["model"]["lambda"] == 0.5
    assert PipelineConfig().forecast.split == 0.8


@pytest.mark.parametrize("data,needle", [
    ({"model": {"lamda": 0.1}}, "model.lamda"),
    ({"model": {"lam": 0.1}}, "model.lam"),
    ({"bogus": 1}, "bogus"),
    ({"model": {"r": 1}}, "model.r"),
    ({"model": {"eps": 0.0}}, "model.eps"),
    ({"forecast": {"forcing": "sometimes"}}, "forecast.forcing"),
    ({"forecast": {"split": 1.5}}, "forecast.split"),
    ({"stats": {"families": ["Cauchy"]}}, "Cauchy"),
    ({"input": {"layout": "diagonal"}}, "input.layout"),
    ({"threads": 0}, "threads"),
])
def test_rejections(data, needle):
    with pytest.raises(ConfigError, match=needle):
        from_dict(data)


def test_load_resolves_relative_paths(tmp_path):
    (tmp_path / "cfg.toml").write_text('[input]\npath = "data.csv"\n')
    cfg = load_config(tmp_path / "cfg.toml")
    assert cfg.input.path == str(tmp_path / "data.csv")


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    (tmp_path / "bad.toml").write_text("[model\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")
