import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def java_fixture_dir() -> Path:
    return FIXTURES / "java"


@pytest.fixture(scope="session")
def java_fixture_files(java_fixture_dir) -> list[Path]:
    return sorted(java_fixture_dir.glob("*.java"))
