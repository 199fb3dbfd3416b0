"""Test configuration and fixtures."""

import pytest
from unittest.mock import patch


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep every test away from the user's config file and output directory."""
    config_dir = tmp_path / "tracelab-config"
    config_file = config_dir / "config.json"
    monkeypatch.delenv("TRACELAB_OUTPUT_DIR", raising=False)

    with patch("tracelab.config.CONFIG_DIR", config_dir), \
         patch("tracelab.config.CONFIG_FILE", config_file):
        yield config_dir, config_file
