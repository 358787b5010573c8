import numpy as np
import pytest

from parsinggait.synth import SynthConfig, generate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """8 subjects × 3 sequences × 12 frames at 32×22."""
    out = tmp_path_factory.mktemp("small_ds")
    cfg = SynthConfig(num_subjects=8, sequences_per_subject=3, frames_per_sequence=12,
                      frame_size=(32, 22), seed=5)
    return generate_dataset(cfg, out)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
