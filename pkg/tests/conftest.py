import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from botnet_detect import _pykernels, kernels  # noqa: E402

try:
    from botnet_detect import _kernels as _cykernels
except ImportError:  # extension not built
    _cykernels = None

BACKENDS = {"python": _pykernels}
if _cykernels is not None:
    BACKENDS["cython"] = _cykernels


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = BACKENDS[request.param]
    monkeypatch.setattr(kernels, "pair_weights", impl.pair_weights)
    monkeypatch.setattr(kernels, "louvain_local_moving", impl.louvain_local_moving)
    monkeypatch.setattr(kernels, "BACKEND", impl.BACKEND)
    return request.param


SCHEMA_DIR = Path(__file__).parent / "schemas"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
