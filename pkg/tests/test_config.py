"""Tests for config module."""

import json

import pytest

from qspectral.config import (
    DEFAULT_QUBIT_CAP,
    get_config,
    is_power_of_two,
    lambda_from_exponent,
    resolve_qubit_cap,
    resolve_setting,
)


class TestResolveQubitCap:
    """Argument > env var > config file > default."""

    def test_default(self, isolated_config):
        assert resolve_qubit_cap() == DEFAULT_QUBIT_CAP == 26

    def test_explicit_wins(self, isolated_config, monkeypatch):
        monkeypatch.setenv("QSPECTRAL_QUBIT_CAP", "20")
        assert resolve_qubit_cap(12) == 12

    def test_env_over_config(self, isolated_config, monkeypatch):
        (isolated_config / "config.json").write_text(json.dumps({"qspectral": {"qubit_cap": 18}}))
        monkeypatch.setenv("QSPECTRAL_QUBIT_CAP", "20")
        assert resolve_qubit_cap() == 20

    def test_config_fallback(self, isolated_config):
        (isolated_config / "config.json").write_text(json.dumps({"qspectral": {"qubit_cap": 18}}))
        assert resolve_qubit_cap() == 18

    def test_invalid_env_warns_and_falls_through(self, isolated_config, monkeypatch, capsys):
        monkeypatch.setenv("QSPECTRAL_QUBIT_CAP", "lots")
        assert resolve_qubit_cap() == DEFAULT_QUBIT_CAP
        assert "not an integer" in capsys.readouterr().err


class TestGetConfig:
    def test_missing_file(self, isolated_config):
        assert get_config() == {}

    def test_empty_file(self, isolated_config):
        (isolated_config / "config.json").write_text("")
        assert get_config() == {}

    def test_invalid_json_warns(self, isolated_config, capsys):
        (isolated_config / "config.json").write_text("{not json")
        assert get_config() == {}
        assert "invalid JSON" in capsys.readouterr().err

    def test_namespace_not_a_dict(self, isolated_config):
        (isolated_config / "config.json").write_text(json.dumps({"qspectral": [1, 2]}))
        assert get_config() == {}

    def test_resolve_setting(self, isolated_config):
        (isolated_config / "config.json").write_text(json.dumps({"qspectral": {"restarts": 20}}))
        assert resolve_setting("restarts", None, 10) == 20
        assert resolve_setting("restarts", 4, 10) == 4
        assert resolve_setting("missing", None, 10) == 10


class TestHelpers:
    @pytest.mark.parametrize("n, expected", [(1, True), (2, True), (256, True), (0, False), (6, False), (250, False)])
    def test_is_power_of_two(self, n, expected):
        assert is_power_of_two(n) is expected

    def test_lambda_from_exponent(self):
        assert lambda_from_exponent(9) == 2**-9 == 0.001953125
        assert lambda_from_exponent(0) == 1.0
