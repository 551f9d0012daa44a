import pytest

from skewltl import kernels2, kernels3


@pytest.fixture(autouse=True)
def _reset_global_knobs():
    """Worker count and cache-block config are process-global; pin them per
    test so ordering cannot leak state."""
    cfg = kernels3.get_block_config()
    saved = (cfg.m_c, cfg.k_c, cfg.n_c)
    kernels2.set_workers(1)
    yield
    kernels2.set_workers(1)
    kernels3.set_block_config(m_c=saved[0], k_c=saved[1], n_c=saved[2])
