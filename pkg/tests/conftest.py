import numpy as np
import pytest

from invctl.dataset import build_dataset
from invctl.gestures import GestureSpec, random_gesture
from invctl.nn import TrainConfig, train

# desk-scale end-to-end configuration
DESK_PRESET = "PluckAResonator"
DESK_SECONDS = 60.0
DESK_SEED = 0
DESK_CONFIG = TrainConfig(epochs=64, batch_size=8, seed=DESK_SEED, layers=2, units=64, threads=1)

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gesture_10s():
    return random_gesture(GestureSpec(10.0, seed=1234))


@pytest.fixture(scope="session")
def gesture_60s():
    return random_gesture(GestureSpec(60.0, seed=99))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def desk_corpus():
    gesture = random_gesture(GestureSpec(DESK_SECONDS, seed=DESK_SEED))
    return gesture, build_dataset(DESK_PRESET, gesture, seed=DESK_SEED)


@pytest.fixture(scope="session")
def desk_run(desk_corpus):
    return train(desk_corpus[1], DESK_CONFIG)


@pytest.fixture(scope="session")
def desk_rerun(desk_corpus, desk_run):
    return train(desk_corpus[1], DESK_CONFIG)


@pytest.fixture(scope="session")
def acceptance_report():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line, flush=True)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
