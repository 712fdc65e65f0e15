import numpy as np
import pytest

from invctl.errors import BadMagic, BadVersion, FormatError, TruncatedFile
from invctl.nn import AdamState, adam_step, forward, init_params, load_checkpoint, save_checkpoint


@pytest.fixture
def trained(rng):
    stack = init_params(3, 5, 9)
    adam = AdamState.for_params(stack.params)
    for _ in range(3):
        grads = {k: rng.standard_normal(p.shape) for k, p in stack.params.items()}
        adam_step(stack.params, grads, adam)
    return stack, adam


def test_round_trip_bit_exact(trained, tmp_path):
    stack, adam = trained
    p = tmp_path / "w.invw"
    save_checkpoint(p, stack, adam)
    s2, a2 = load_checkpoint(p)
    assert s2.equals(stack)
    assert a2.t == adam.t == 3
    for k in stack.params:
        assert a2.m[k].tobytes() == adam.m[k].tobytes()
        assert a2.v[k].tobytes() == adam.v[k].tobytes()
    save_checkpoint(tmp_path / "again.invw", s2, a2)
    assert p.read_bytes() == (tmp_path / "again.invw").read_bytes()


def test_forward_after_load(trained, tmp_path, rng):
    stack, adam = trained
    save_checkpoint(tmp_path / "w.invw", stack, adam)
    loaded, _ = load_checkpoint(tmp_path / "w.invw")
    x = rng.uniform(-1, 1, (2, 64))
    assert forward(loaded, x)[0].tobytes() == forward(stack, x)[0].tobytes()


def test_without_optimizer_state(tmp_path):
    stack = init_params(2, 3, 0)
    save_checkpoint(tmp_path / "w.invw", stack)
    _, adam = load_checkpoint(tmp_path / "w.invw")
    assert adam.t == 0 and all(np.all(m == 0) for m in adam.m.values())


def _saved(tmp_path, trained):
    p = tmp_path / "w.invw"
    save_checkpoint(p, *trained)
    return p, bytearray(p.read_bytes())


def test_bad_magic(trained, tmp_path):
    p, raw = _saved(tmp_path, trained)
    raw[0:4] = b"INVC"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        load_checkpoint(p)


def test_bad_version(trained, tmp_path):
    p, raw = _saved(tmp_path, trained)
    raw[4:8] = (2).to_bytes(4, "little")
    p.write_bytes(bytes(raw))
    with pytest.raises(BadVersion):
        load_checkpoint(p)


@pytest.mark.parametrize("keep", [6, 40, -500, -10, -3])
def test_truncated(trained, tmp_path, keep):
    p, raw = _saved(tmp_path, trained)
    p.write_bytes(bytes(raw[:keep]))
    with pytest.raises(TruncatedFile):
        load_checkpoint(p)


def test_trailing_bytes(trained, tmp_path):
    p, raw = _saved(tmp_path, trained)
    p.write_bytes(bytes(raw) + b"x")
    with pytest.raises(FormatError):
        load_checkpoint(p)
