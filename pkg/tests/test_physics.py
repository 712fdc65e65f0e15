import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invctl import physics
from invctl.errors import EmptyInput
from invctl.physics import (
    GESTURE, GROUND, PRESETS, SAMPLE_RATE, FrictionLink, ModalResonator, Mode, ModelGraph,
    PluckLink, PointMass, SpringDamper, TouchLink, build_preset, friction_curve, render,
    render_traced, reset, step,
)

FS = SAMPLE_RATE
WIN = FS // 100  # 10 ms


def ramp(seconds=1.0, lo=-0.05, hi=0.05):
    return np.linspace(lo, hi, int(seconds * FS))


def single_mode_graph(freq=440.0, t60=1.0):
    # a vanishingly weak spring lets the gesture deliver a one-sample kick
    res = ModalResonator((Mode(freq, t60, 1.0),))
    return ModelGraph((res,), (SpringDamper(GESTURE, 0, stiffness=1e-6),), listen=(0,),
                      output_gain=1.0)


class TestPresets:
    def test_pluck_a_resonator_structure(self):
        g = build_preset("PluckAResonator")
        assert len(g.elements) == 1 and isinstance(g.elements[0], ModalResonator)
        assert [m.frequency for m in g.elements[0].modes] == [440.0, 880.0, 1320.0]
        assert [m.t60 for m in g.elements[0].modes] == [1.0, 0.7, 0.4]
        (link,) = g.links
        assert isinstance(link, PluckLink)
        assert link.attach_offset == 0.0 and link.threshold == 0.005 and link.stiffness == 2000.0

    def test_harp_has_ten_distinct_plucking_points(self):
        g = build_preset("PluckHarp10")
        assert sum(isinstance(e, ModalResonator) for e in g.elements) == 10
        offsets = [l.attach_offset for l in g.links if isinstance(l, PluckLink)]
        assert len(set(offsets)) == 10
        assert offsets[0] == pytest.approx(-0.045) and offsets[-1] == pytest.approx(0.045)
        assert all(len(e.modes) == 5 for e in g.elements)
        assert g.elements[0].modes[0].frequency == 220.0

    def test_touch_offsets(self):
        g = build_preset("TouchSeveralModalResn")
        assert [l.contact_offset for l in g.links] == [-0.02, 0.0, 0.02]
        assert [e.modes[0].frequency for e in g.elements] == [330.0, 440.0, 550.0]

    def test_chain(self):
        g = build_preset("ScratchMassLinkChain")
        assert len(g.elements) == 8 and all(e.mass == 0.005 for e in g.elements)
        springs = [l for l in g.links if isinstance(l, SpringDamper)]
        assert len(springs) == 9
        assert springs[0].a == GROUND and springs[-1].b == GROUND
        (bow,) = [l for l in g.links if isinstance(l, FrictionLink)]
        assert bow.peak_force == 0.5 and bow.v0 == 0.05

    @pytest.mark.parametrize("name", PRESETS)
    def test_build_is_deterministic(self, name):
        assert build_preset(name) == build_preset(name)

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            build_preset("pluckaresonator")

    @pytest.mark.parametrize("name", PRESETS)
    def test_full_range_sweep_peak(self, name):
        sweep = np.concatenate([ramp(), ramp()[::-1], np.full(FS, -0.05)])
        peak = np.abs(render(build_preset(name), sweep)).max()
        assert 0.1 <= peak <= 0.9


class TestGraphValidation:
    def test_bad_endpoint(self):
        with pytest.raises(ValueError):
            ModelGraph((PointMass(1.0),), (SpringDamper(0, 3, 1.0),), listen=(0,), output_gain=1.0)

    def test_bad_listen(self):
        with pytest.raises(ValueError):
            ModelGraph((PointMass(1.0),), (), listen=(1,), output_gain=1.0)

    @pytest.mark.parametrize("kwargs", [dict(frequency=0.0, t60=1.0), dict(frequency=30000.0, t60=1.0),
                                        dict(frequency=100.0, t60=0.0)])
    def test_mode_invariants(self, kwargs):
        with pytest.raises(ValueError):
            Mode(**kwargs)

    def test_mass_positive(self):
        with pytest.raises(ValueError):
            PointMass(0.0)


class TestSilence:
    def test_pluck_far_gesture_is_silent(self):
        out = render(build_preset("PluckAResonator"), np.full(FS, -0.05))
        assert np.all(out == 0.0)

    @pytest.mark.parametrize("name", PRESETS)
    def test_rest_far_from_contacts(self, name):
        # -0.05 m is outside every pluck zone and below every touch contact
        out = render(build_preset(name), np.full(FS // 4, -0.05))
        assert np.all(out == 0.0)

    @pytest.mark.parametrize("level", [-0.05, -0.03, 0.012, 0.05])
    def test_chain_constant_gesture(self, level):
        out = render(build_preset("ScratchMassLinkChain"), np.full(FS // 4, level))
        assert np.all(out == 0.0)


class TestPluck:
    def test_ramp_onset(self):
        g = build_preset("PluckAResonator")
        gesture = ramp()
        out = render(g, gesture)
        crossing = int(np.argmax(np.abs(gesture) < 0.005))
        assert np.all(out[:crossing] == 0.0)
        first = int(np.argmax(out != 0.0))
        assert crossing <= first < crossing + WIN
        assert np.sqrt(np.mean(out[crossing:crossing + WIN] ** 2)) > 0

    def test_release_signs_alternate(self, gesture_10s):
        for name in ("PluckAResonator", "PluckHarp10"):
            g = build_preset(name)
            _, trace = render_traced(g, gesture_10s)
            assert len(trace.releases) > 10
            for link in range(len(g.links)):
                signs = trace.releases[trace.releases[:, 1] == link, 2]
                assert np.all(signs != 0)
                assert np.all(signs[1:] == -signs[:-1])

    def test_force_zero_unless_engaged(self, gesture_10s):
        g = build_preset("PluckAResonator")
        _, trace = render_traced(g, gesture_10s)
        delta = trace.link_vars[:, 0]
        force = trace.forces[:, 0]
        assert np.all(force[np.abs(delta) >= 0.005] == 0.0)
        engaged = force != 0.0
        np.testing.assert_allclose(force[engaged], 2000.0 * delta[engaged], rtol=1e-15)

    def test_state_machine_by_hand(self):
        # slow up-down-up motion across the single pluck point
        g = build_preset("PluckAResonator")
        assert g.pluck_state(0) == (True, False, 0)
        render(g, ramp(0.2, -0.05, 0.05))
        armed, engaged, last = g.pluck_state(0)
        assert (armed, engaged, last) == (False, False, 1)
        render(g, ramp(0.2, 0.05, -0.05))
        assert g.pluck_state(0)[2] == -1
        render(g, ramp(0.2, -0.05, 0.05))
        assert g.pluck_state(0)[2] == 1


class TestTouch:
    def test_force_zero_without_penetration(self, gesture_10s):
        g = build_preset("TouchSeveralModalResn")
        _, trace = render_traced(g, gesture_10s)
        p = trace.link_vars
        assert np.all(trace.forces[p <= 0.0] == 0.0)
        assert np.any(trace.forces[p > 0.0] != 0.0)

    @given(p=st.floats(-1, 0), p_prev=st.floats(-1, 1))
    def test_touch_force_unilateral(self, p, p_prev):
        assert physics.touch_force(p, p_prev, 1000.0, 0.5, FS) == 0.0


class TestFriction:
    @given(v=st.floats(-1e3, 1e3, allow_nan=False))
    def test_odd(self, v):
        assert friction_curve(-v, 0.5, 0.05) == -friction_curve(v, 0.5, 0.05)

    @given(v=st.floats(-1e6, 1e6, allow_nan=False), peak=st.floats(1e-3, 10.0),
           v0=st.floats(1e-3, 1.0))
    def test_bounded(self, v, peak, v0):
        assert abs(friction_curve(v, peak, v0)) <= peak

    def test_peak_at_v0(self):
        assert friction_curve(0.05, 0.5, 0.05) == pytest.approx(0.5, rel=1e-15)


class TestModalDecay:
    def test_single_mode_t60(self):
        t60 = 1.0
        g = single_mode_graph(440.0, t60)
        gesture = np.zeros(int(1.1 * FS))
        gesture[0] = 0.05
        out = render(g, gesture)
        r = math.exp(-math.log(1000.0) / (t60 * FS))
        period = int(FS / 440.0) + 1
        n60 = int(t60 * FS)
        peak = np.abs(out).max()
        env = np.abs(out[n60 - period // 2:n60 + period // 2 + 1]).max()
        drop = 20 * math.log10(env / peak)
        assert drop == pytest.approx(-60.0, abs=1.0)
        # closed form: the envelope follows r**n between any two periods
        a = np.abs(out[1000:1000 + period]).max()
        b = np.abs(out[21000:21000 + period]).max()
        assert b / a == pytest.approx(r ** 20000, rel=1e-3)

    @pytest.mark.parametrize("name,gesture", [
        ("PluckAResonator", np.concatenate([ramp(0.2), np.full(3 * FS, 0.05)])),
        ("PluckHarp10", np.concatenate([ramp(0.2), np.full(4 * FS, 0.05)])),
        ("TouchSeveralModalResn", np.concatenate([ramp(0.05), ramp(0.05)[::-1], np.full(3 * FS, -0.05)])),
    ])
    def test_envelope_non_increasing_after_release(self, name, gesture):
        preset = build_preset(name)
        still = int(np.flatnonzero(np.diff(gesture) != 0)[-1]) + 2
        # each listening point on its own; a sum of detuned strings beats
        for point in preset.listen:
            g = ModelGraph(preset.elements, preset.links, listen=(point,), output_gain=1.0)
            tail = render(g, gesture)[still:]
            n_win = tail.size // WIN
            env = np.abs(tail[:n_win * WIN]).reshape(n_win, WIN).max(axis=1)
            if env.max() == 0.0:
                continue
            floor = env.max() * 10 ** (-80 / 20)
            live = env[1:][env[1:] > floor]
            assert live.size > 20
            assert np.all(np.diff(live) <= 0.0)


class TestRender:
    @pytest.mark.parametrize("name", PRESETS)
    def test_bit_identical(self, name, gesture_10s):
        a = render(build_preset(name), gesture_10s)
        b = render(build_preset(name), gesture_10s)
        assert a.tobytes() == b.tobytes()

    def test_empty(self):
        with pytest.raises(EmptyInput):
            render(build_preset("PluckAResonator"), np.array([]))

    def test_length(self, gesture_10s):
        assert render(build_preset("PluckHarp10"), gesture_10s[:1234]).shape == (1234,)

    def test_step_matches_render(self, gesture_10s):
        g1, g2 = build_preset("PluckHarp10"), build_preset("PluckHarp10")
        chunk = gesture_10s[2000:4000]
        expected = render(g1, chunk)
        got = np.array([step(g2, x) for x in chunk])
        assert got.tobytes() == expected.tobytes()

    def test_chunked_render_continues(self, gesture_10s):
        g1, g2 = build_preset("ScratchMassLinkChain"), build_preset("ScratchMassLinkChain")
        whole = render(g1, gesture_10s)
        parts = np.concatenate([render(g2, gesture_10s[:12345]), render(g2, gesture_10s[12345:])])
        assert whole.tobytes() == parts.tobytes()

    @pytest.mark.parametrize("name", PRESETS)
    def test_out_of_range_is_clamped(self, name, gesture_10s):
        g = gesture_10s[:FS] * 3.0
        a = render(build_preset(name), g)
        b = render(build_preset(name), np.clip(g, -0.05, 0.05))
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("name", PRESETS)
    def test_finite_and_bounded(self, name, gesture_10s):
        g = build_preset(name)
        out = render(g, gesture_10s)
        assert np.all(np.isfinite(out))
        assert g.max_displacement < 1.0


class TestReset:
    @pytest.mark.parametrize("name", PRESETS)
    def test_reset_equals_fresh(self, name, gesture_10s):
        g = build_preset(name)
        render(g, gesture_10s[:20000])
        reset(g)
        a = render(g, gesture_10s[20000:60000])
        b = render(build_preset(name), gesture_10s[20000:60000])
        assert a.tobytes() == b.tobytes()

    def test_reset_mid_render_then_far_gesture(self, gesture_10s):
        g = build_preset("PluckAResonator")
        render(g, gesture_10s[:30000])
        reset(g)
        assert np.all(render(g, np.full(FS // 2, -0.05)) == 0.0)

    def test_idempotent(self, gesture_10s):
        g1, g2 = build_preset("PluckHarp10"), build_preset("PluckHarp10")
        for g in (g1, g2):
            render(g, gesture_10s[:10000])
        reset(g1)
        reset(g2)
        reset(g2)
        assert render(g1, gesture_10s).tobytes() == render(g2, gesture_10s).tobytes()
        assert g1.pluck_state(3) == g2.pluck_state(3)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), name=st.sampled_from(PRESETS))
def test_render_is_pure(seed, name):
    g = np.random.default_rng(seed % 2**32).uniform(-0.06, 0.06, 2000)
    assert render(build_preset(name), g).tobytes() == render(build_preset(name), g).tobytes()
