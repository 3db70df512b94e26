from __future__ import annotations

import os

import pytest

# --- Force test settings early (before package import) ---
os.environ.setdefault("REDLAB_ENVIRONMENT", "test")
os.environ.setdefault("REDLAB_LOG_LEVEL", "INFO")
os.environ.setdefault("REDLAB_JSON_LOGS", "false")
os.environ.setdefault("REDLAB_THREADS", "2")
os.environ.pop("REDLAB_SENTRY_DSN", None)
os.environ.pop("REDLAB_METRICS_TEXTFILE_PATH", None)

from click.testing import CliRunner  # noqa: E402

from redlab.services.function_units import FunctionUnitSpec  # noqa: E402
from redlab.services.netlist import Netlist  # noqa: E402


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture(scope="session")
def rca4() -> Netlist:
    return FunctionUnitSpec.rca(4).build()


@pytest.fixture(scope="session")
def bam4x4() -> Netlist:
    return FunctionUnitSpec.bam(4, 4).build()
