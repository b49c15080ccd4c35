import io
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from complaint_insight import _core  # noqa: E402
from complaint_insight.ingest import SchemaSpec, stream_records  # noqa: E402
from complaint_insight.synth import SynthSpec, synthetic_bytes  # noqa: E402

KERNELS = ("scan_gini", "scan_sse", "gibbs_sweep", "pegasos_epoch")

ACCEPTANCE_RESULTS = []


@pytest.fixture(params=sorted(_core.BACKENDS))
def backend(request, monkeypatch):
    """Runs the test once per available kernel backend."""
    impl = _core.BACKENDS[request.param]
    for name in KERNELS:
        monkeypatch.setattr(_core, name, getattr(impl, name))
    return request.param


@pytest.fixture(scope="session")
def small_csv() -> bytes:
    return synthetic_bytes(SynthSpec(rows=600, companies=60, issues=12, seed=11))


@pytest.fixture(scope="session")
def small_records(small_csv):
    return [r for r in stream_records(io.BytesIO(small_csv), SchemaSpec.default(strict=True))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, name, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {name}: {detail}")
