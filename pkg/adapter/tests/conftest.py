import pytest

from lm_adapter import AdapterConfig, init_tiny_checkpoint


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny"
    init_tiny_checkpoint(path, seed=0)
    return path


@pytest.fixture
def fast_config(tiny_checkpoint):
    return AdapterConfig(model=str(tiny_checkpoint), max_source_tokens=128,
                         max_target_tokens=12, learning_rate=1e-3)
