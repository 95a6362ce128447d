"""Tests for configuration models"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from src.config.models import RunConfig, Settings, Subcommand, get_settings


def test_settings_defaults():
    settings = Settings()

    assert settings.log_level == "INFO"
    assert settings.rational is False
    assert settings.degree_cap == 6
    assert settings.quadrature_cap == 20
    assert settings.exactness_tol == 1e-10
    assert settings.sampling_tol == 1e-11
    assert settings.stable_threshold == 1e-8


def test_settings_with_env_vars(monkeypatch):
    """Test Settings loading from environment variables"""
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("ALFELD_RATIONAL", "true")
    monkeypatch.setenv("ALFELD_DEGREE_CAP", "4")
    monkeypatch.setenv("ALFELD_EXACTNESS_TOL", "1e-12")
    monkeypatch.setenv("ALFELD_DENSE_LIMIT", "500")

    settings = Settings()

    assert settings.log_level == "DEBUG"
    assert settings.rational is True
    assert settings.degree_cap == 4
    assert settings.exactness_tol == 1e-12
    assert settings.dense_limit == 500


def test_get_settings_is_cached(monkeypatch):
    first = get_settings()
    monkeypatch.setenv("ALFELD_QUADRATURE_CAP", "12")

    assert get_settings() is first

    get_settings.cache_clear()
    assert get_settings().quadrature_cap == 12


class TestRunConfig:
    """Subcommand requirements and tolerance overrides"""

    @pytest.mark.parametrize("subcommand", ["infsup", "solve", "convergence", "bootstrap"])
    def test_pair_required(self, subcommand):
        with pytest.raises(ValidationError, match="requires --pair"):
            RunConfig(subcommand=subcommand, levels=3)

    def test_space_required_for_unisolvence(self):
        with pytest.raises(ValidationError, match="requires --space"):
            RunConfig(subcommand=Subcommand.UNISOLVENCE)

    def test_refine_needs_a_mesh(self):
        with pytest.raises(ValidationError):
            RunConfig(subcommand=Subcommand.REFINE)

        config = RunConfig(subcommand=Subcommand.REFINE, mesh_path=Path("domain.mesh"))
        assert config.mesh_path == Path("domain.mesh")

    def test_explicit_split_needs_points(self):
        with pytest.raises(ValidationError, match="--split-points"):
            RunConfig(subcommand=Subcommand.REFINE, mesh="square2", split_rule="explicit")

    def test_convergence_levels(self):
        with pytest.raises(ValidationError, match="levels >= 3"):
            RunConfig(subcommand=Subcommand.CONVERGENCE, pair="cor5.2", levels=2)

    def test_unknown_pair(self):
        with pytest.raises(ValidationError):
            RunConfig(subcommand=Subcommand.INFSUP, pair="taylor-hood")

    def test_ranges(self):
        with pytest.raises(ValidationError):
            RunConfig(subcommand=Subcommand.LOCAL_DIV, k=0)
        with pytest.raises(ValidationError):
            RunConfig(subcommand=Subcommand.LOCAL_DIV, d=1)

    def test_unknown_tolerance(self):
        with pytest.raises(ValidationError, match="unknown tolerance"):
            RunConfig(subcommand=Subcommand.LOCAL_DIV, tolerances={"mystery_tol": 1.0})

    def test_tolerance_falls_back_to_settings(self):
        settings = Settings()
        config = RunConfig(subcommand=Subcommand.LOCAL_DIV, tolerances={"exactness_tol": 1e-6})

        assert config.tolerance("exactness_tol", settings) == 1e-6
        assert config.tolerance("sampling_tol", settings) == settings.sampling_tol

    def test_frozen(self):
        config = RunConfig(subcommand=Subcommand.BUBBLES)

        with pytest.raises(ValidationError):
            config.k = 3
