import pytest

from treescan.backend import active_backend, numba_available, set_backend

BACKENDS = ["numba", "numpy"] if numba_available() else ["numpy"]


@pytest.fixture(params=BACKENDS)
def each_backend(request):
    """Run a test once per kernel backend, restoring the default afterwards."""
    previous = active_backend()
    set_backend(request.param)
    yield request.param
    set_backend(previous)
