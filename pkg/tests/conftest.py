import pytest

from forkbound.engines import warmup_kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    # compile (or load from cache) the numba kernels once, outside any timed test
    warmup_kernels()
