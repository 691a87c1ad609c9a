"""Shared fixtures; puts the project root on sys.path like the scripts do."""
import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent.parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))


@pytest.fixture
def out_dir(tmp_path):
    """Fresh output directory per test."""
    path = tmp_path / "outputs"
    path.mkdir()
    return path


@pytest.fixture(autouse=True)
def quiet_logs(monkeypatch):
    monkeypatch.delenv("QGDUAL_LOG", raising=False)
