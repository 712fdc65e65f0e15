"""Mass-interaction sound synthesis engine and the four preset instruments.

A :class:`ModelGraph` is a fixed set of elements (point masses and modal
resonators) joined by links. One end of every nonlinear link is the gesture
point, i.e. the performer's hand position in meters. Simulation runs at
44100 Hz through a numba kernel; the graph description is flattened into
arrays once, at construction.

Element update rules
--------------------
Point mass, explicit two-step scheme::

    x[n+1] = 2 x[n] - x[n-1] + (T^2 / m) F[n]

Modal resonator, one two-pole filter per mode, driven by the force at the
contact point::

    y[n+1] = 2 r cos(w) y[n] - r^2 y[n-1] + gain (T^2 / m) F[n]
    r = exp(-ln(1000) / (t60 fs)),   w = 2 pi f / fs

and the contact displacement is ``sum(gain * y)``.

Velocities are backward differences. The listening signal is
``output_gain * sum(displacement of listening elements)`` taken after the
state advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numba
import numpy as np

from .errors import EmptyInput

SAMPLE_RATE = 44100
GESTURE_LIMIT = 0.05

# link endpoint codes
GESTURE = -1
GROUND = -2

_SPRING, _PLUCK, _TOUCH, _FRICTION = 0, 1, 2, 3
_MASS, _RESONATOR = 0, 1

PRESETS = ("PluckAResonator", "TouchSeveralModalResn", "ScratchMassLinkChain", "PluckHarp10")


@dataclass(frozen=True)
class PointMass:
    mass: float  # kg

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class Mode:
    frequency: float  # Hz
    t60: float  # s
    gain: float = 1.0

    def __post_init__(self):
        if not 0 < self.frequency < SAMPLE_RATE / 2:
            raise ValueError(f"mode frequency {self.frequency} outside (0, Nyquist)")
        if not self.t60 > 0:
            raise ValueError("t60 must be positive")

    def pole_radius(self, fs: float = SAMPLE_RATE) -> float:
        return math.exp(-math.log(1000.0) / (self.t60 * fs))


@dataclass(frozen=True)
class ModalResonator:
    modes: tuple[Mode, ...]
    mass: float = 1e-3  # effective mass seen at the contact point, kg

    def __post_init__(self):
        if len(self.modes) < 1:
            raise ValueError("a resonator needs at least one mode")
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class SpringDamper:
    """Linear spring-damper with zero rest length between two endpoints."""

    a: int
    b: int
    stiffness: float
    damping: float = 0.0


@dataclass(frozen=True)
class PluckLink:
    """Plectrum between the gesture point and ``target``.

    With ``delta = (gesture - attach_offset) - position(target)``:

    * armed and ``|delta| < threshold`` -> engaged, force on target is
      ``stiffness * delta``;
    * engaged and ``|delta| >= threshold`` -> release: force drops to zero,
      the link disarms and ``last_sign = sign(delta)``;
    * disarmed -> re-arms once ``sign(delta) == -last_sign``;
    * engaged after a re-arm and ``sign(delta)`` falls back to ``last_sign``
      -> the plectrum slides off without plucking (no release event, the
      force is ~0 there), so release signs strictly alternate.

    Before the first release ``last_sign`` is 0 and the link starts armed.
    """

    target: int
    stiffness: float
    threshold: float
    attach_offset: float = 0.0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("pluck threshold must be positive")


@dataclass(frozen=True)
class TouchLink:
    """Unilateral contact. Penetration ``p = (gesture - contact_offset) -
    position(target)``; while ``p > 0`` the hand pushes the target with
    ``stiffness * p + damping * dp/dt``, otherwise no force."""

    target: int
    stiffness: float
    damping: float
    contact_offset: float = 0.0


@dataclass(frozen=True)
class FrictionLink:
    """Bow-like friction driven by the gesture velocity relative to ``target``."""

    target: int
    peak_force: float
    v0: float


Element = Union[PointMass, ModalResonator]
Link = Union[SpringDamper, PluckLink, TouchLink, FrictionLink]


@numba.njit(cache=True)
def friction_curve(v_rel, peak_force, v0):
    """Falling friction characteristic, odd in ``v_rel``, peak at ``|v_rel| = v0``."""
    u = v_rel / v0
    return peak_force * u * math.exp(0.5 - 0.5 * u * u)


@numba.njit(cache=True)
def touch_force(p, p_prev, stiffness, damping, fs):
    if p <= 0.0:
        return 0.0
    return stiffness * p + damping * (p - p_prev) * fs


@numba.njit(cache=True)
def _sign(x):
    if x > 0.0:
        return 1
    if x < 0.0:
        return -1
    return 0


@numba.njit(cache=True)
def _endpoint(code, g, g_prev, pos, pos_prev, fs):
    if code == GESTURE:
        return g, (g - g_prev) * fs
    if code == GROUND:
        return 0.0, 0.0
    return pos[code], (pos[code] - pos_prev[code]) * fs


@numba.njit(cache=True)
def _run(gesture, out, listen, output_gain, fs,
         elem_kind, elem_inv_m, pos, pos_prev,
         mode_elem, mode_a1, mode_a2, mode_b, mode_w, y1, y2,
         link_kind, link_a, link_b, link_par, link_int, link_prev,
         gstate, force_trace, var_trace, events, n_events):
    # link_int columns: armed, engaged, last_sign
    # gstate: [previous gesture, started flag, max |position| seen]
    n_elem = elem_kind.shape[0]
    n_modes = mode_a1.shape[0]
    n_links = link_kind.shape[0]
    tracing = force_trace.shape[0] > 0
    t2 = 1.0 / (fs * fs)
    F = np.zeros(n_elem)
    for n in range(gesture.shape[0]):
        g = gesture[n]
        if g > GESTURE_LIMIT:
            g = GESTURE_LIMIT
        elif g < -GESTURE_LIMIT:
            g = -GESTURE_LIMIT
        if gstate[1] == 0.0:
            gstate[0] = g
            gstate[1] = 1.0
        g_prev = gstate[0]
        for e in range(n_elem):
            F[e] = 0.0
        for l in range(n_links):
            kind = link_kind[l]
            b = link_b[l]
            f = 0.0
            var = 0.0
            if kind == _SPRING:
                xa, va = _endpoint(link_a[l], g, g_prev, pos, pos_prev, fs)
                xb, vb = _endpoint(b, g, g_prev, pos, pos_prev, fs)
                f = link_par[l, 0] * (xa - xb) + link_par[l, 1] * (va - vb)
                var = xa - xb
                if link_a[l] >= 0:
                    F[link_a[l]] -= f
            elif kind == _PLUCK:
                k = link_par[l, 0]
                d = link_par[l, 1]
                delta = (g - link_par[l, 2]) - pos[b]
                var = delta
                s = _sign(delta)
                last = link_int[l, 2]
                if link_int[l, 1] == 1:
                    if last != 0 and s == last:
                        link_int[l, 1] = 0
                        link_int[l, 0] = 0
                    elif abs(delta) >= d:
                        link_int[l, 1] = 0
                        link_int[l, 0] = 0
                        link_int[l, 2] = s
                        if n_events[0] < events.shape[0]:
                            i = n_events[0]
                            events[i, 0] = n
                            events[i, 1] = l
                            events[i, 2] = s
                        n_events[0] += 1
                else:
                    if link_int[l, 0] == 0 and s != 0 and s == -last:
                        link_int[l, 0] = 1
                    if link_int[l, 0] == 1 and abs(delta) < d:
                        link_int[l, 1] = 1
                if link_int[l, 1] == 1:
                    f = k * delta
            elif kind == _TOUCH:
                p = (g - link_par[l, 2]) - pos[b]
                var = p
                f = touch_force(p, link_prev[l], link_par[l, 0], link_par[l, 1], fs)
                link_prev[l] = p
            else:
                v_rel = (g - g_prev) * fs - (pos[b] - pos_prev[b]) * fs
                var = v_rel
                f = friction_curve(v_rel, link_par[l, 0], link_par[l, 1])
            if b >= 0:
                F[b] += f
            if tracing:
                force_trace[n, l] = f
                var_trace[n, l] = var
        # advance point masses
        for e in range(n_elem):
            if elem_kind[e] == _MASS:
                x_new = 2.0 * pos[e] - pos_prev[e] + t2 * elem_inv_m[e] * F[e]
                pos_prev[e] = pos[e]
                pos[e] = x_new
            else:
                pos_prev[e] = pos[e]
                pos[e] = 0.0
        # advance modes and rebuild resonator contact positions
        for k in range(n_modes):
            e = mode_elem[k]
            y_new = mode_a1[k] * y1[k] - mode_a2[k] * y2[k] + mode_b[k] * F[e]
            y2[k] = y1[k]
            y1[k] = y_new
            pos[e] += mode_w[k] * y_new
        acc = 0.0
        for j in range(listen.shape[0]):
            acc += pos[listen[j]]
        out[n] = output_gain * acc
        for e in range(n_elem):
            a = abs(pos[e])
            if a > gstate[2]:
                gstate[2] = a
        gstate[0] = g


@dataclass
class Trace:
    """Per-sample link forces and link variables from an instrumented render.

    ``link_vars`` holds delta for pluck links, penetration for touch links,
    relative velocity for friction links and extension for springs.
    ``releases`` rows are ``(sample, link, sign)``.
    """

    forces: np.ndarray
    link_vars: np.ndarray
    releases: np.ndarray


@dataclass(eq=False)
class ModelGraph:
    elements: tuple[Element, ...]
    links: tuple[Link, ...]
    listen: tuple[int, ...]
    output_gain: float
    name: str = ""
    sample_rate: int = SAMPLE_RATE
    _arrays: dict = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.elements)
        for link in self.links:
            ends = (link.a, link.b) if isinstance(link, SpringDamper) else (GESTURE, link.target)
            for end in ends:
                if end not in (GESTURE, GROUND) and not 0 <= end < n:
                    raise ValueError(f"link endpoint {end} does not name an element")
            if not isinstance(link, SpringDamper) and not 0 <= link.target < n:
                raise ValueError("nonlinear links must act on an element")
        for j in self.listen:
            if not 0 <= j < n:
                raise ValueError(f"listening point {j} does not name an element")
        self._build_arrays()
        self._events_cap = 1 << 16
        reset(self)

    def __eq__(self, other):
        if not isinstance(other, ModelGraph):
            return NotImplemented
        return (self.elements, self.links, self.listen, self.output_gain, self.name,
                self.sample_rate) == (other.elements, other.links, other.listen,
                                      other.output_gain, other.name, other.sample_rate)

    def _build_arrays(self):
        fs = float(self.sample_rate)
        kinds, inv_m = [], []
        m_elem, a1, a2, bb, w = [], [], [], [], []
        for e, el in enumerate(self.elements):
            if isinstance(el, PointMass):
                kinds.append(_MASS)
                inv_m.append(1.0 / el.mass)
            else:
                kinds.append(_RESONATOR)
                inv_m.append(0.0)
                for mode in el.modes:
                    r = mode.pole_radius(fs)
                    m_elem.append(e)
                    a1.append(2.0 * r * math.cos(2.0 * math.pi * mode.frequency / fs))
                    a2.append(r * r)
                    bb.append(mode.gain / (el.mass * fs * fs))
                    w.append(mode.gain)
        l_kind, l_a, l_b, par = [], [], [], []
        for link in self.links:
            if isinstance(link, SpringDamper):
                l_kind.append(_SPRING)
                l_a.append(link.a)
                l_b.append(link.b)
                par.append((link.stiffness, link.damping, 0.0))
            elif isinstance(link, PluckLink):
                l_kind.append(_PLUCK)
                l_a.append(GESTURE)
                l_b.append(link.target)
                par.append((link.stiffness, link.threshold, link.attach_offset))
            elif isinstance(link, TouchLink):
                l_kind.append(_TOUCH)
                l_a.append(GESTURE)
                l_b.append(link.target)
                par.append((link.stiffness, link.damping, link.contact_offset))
            elif isinstance(link, FrictionLink):
                l_kind.append(_FRICTION)
                l_a.append(GESTURE)
                l_b.append(link.target)
                par.append((link.peak_force, link.v0, 0.0))
            else:
                raise TypeError(f"unknown link type {type(link).__name__}")
        n_el, n_lk, n_md = len(self.elements), len(self.links), len(a1)
        self._arrays = dict(
            listen=np.array(self.listen, dtype=np.int64),
            elem_kind=np.array(kinds, dtype=np.int64),
            elem_inv_m=np.array(inv_m, dtype=np.float64),
            pos=np.zeros(n_el),
            pos_prev=np.zeros(n_el),
            mode_elem=np.array(m_elem, dtype=np.int64),
            mode_a1=np.array(a1, dtype=np.float64),
            mode_a2=np.array(a2, dtype=np.float64),
            mode_b=np.array(bb, dtype=np.float64),
            mode_w=np.array(w, dtype=np.float64),
            y1=np.zeros(n_md),
            y2=np.zeros(n_md),
            link_kind=np.array(l_kind, dtype=np.int64),
            link_a=np.array(l_a, dtype=np.int64),
            link_b=np.array(l_b, dtype=np.int64),
            link_par=np.array(par, dtype=np.float64).reshape(n_lk, 3),
            link_int=np.zeros((n_lk, 3), dtype=np.int64),
            link_prev=np.zeros(n_lk),
            gstate=np.zeros(3),
        )

    # read-only views of the simulation state
    @property
    def positions(self) -> np.ndarray:
        return self._arrays["pos"].copy()

    @property
    def max_displacement(self) -> float:
        """Largest |element position| seen since the last reset."""
        return float(self._arrays["gstate"][2])

    def pluck_state(self, link: int) -> tuple[bool, bool, int]:
        """``(armed, engaged, last_sign)`` of a pluck link."""
        if not isinstance(self.links[link], PluckLink):
            raise TypeError(f"link {link} is not a PluckLink")
        armed, engaged, last = self._arrays["link_int"][link]
        return bool(armed), bool(engaged), int(last)

    def _advance(self, gesture, out, force_trace, var_trace, events):
        a = self._arrays
        n_events = np.zeros(1, dtype=np.int64)
        _run(gesture, out, a["listen"], float(self.output_gain), float(self.sample_rate),
             a["elem_kind"], a["elem_inv_m"], a["pos"], a["pos_prev"],
             a["mode_elem"], a["mode_a1"], a["mode_a2"], a["mode_b"], a["mode_w"],
             a["y1"], a["y2"],
             a["link_kind"], a["link_a"], a["link_b"], a["link_par"], a["link_int"],
             a["link_prev"], a["gstate"], force_trace, var_trace, events, n_events)
        return int(n_events[0])


_NO_TRACE = np.zeros((0, 0))
_NO_EVENTS = np.zeros((0, 3), dtype=np.int64)


def reset(graph: ModelGraph) -> None:
    """Zero all element states, filter memories and link states; re-arm plucks."""
    a = graph._arrays
    for key in ("pos", "pos_prev", "y1", "y2", "link_prev", "gstate"):
        a[key][:] = 0.0
    a["link_int"][:] = 0
    a["link_int"][a["link_kind"] == _PLUCK, 0] = 1


def step(graph: ModelGraph, gesture_sample: float) -> float:
    """Advance one sample; returns the output sample."""
    out = np.zeros(1)
    graph._advance(np.array([gesture_sample], dtype=np.float64), out,
                   _NO_TRACE, _NO_TRACE, _NO_EVENTS)
    return float(out[0])


def _as_gesture(gesture) -> np.ndarray:
    g = np.ascontiguousarray(gesture, dtype=np.float64)
    if g.ndim != 1:
        raise ValueError("gesture must be one-dimensional")
    if g.size == 0:
        raise EmptyInput("gesture has zero samples")
    return g


def render(graph: ModelGraph, gesture: np.ndarray) -> np.ndarray:
    """Run the graph over a 44100 Hz gesture (meters), continuing from its
    current state. Call :func:`reset` first for a fresh render."""
    g = _as_gesture(gesture)
    out = np.empty_like(g)
    graph._advance(g, out, _NO_TRACE, _NO_TRACE, _NO_EVENTS)
    return out


def render_traced(graph: ModelGraph, gesture: np.ndarray) -> tuple[np.ndarray, Trace]:
    """Like :func:`render` but also records every link force per sample."""
    g = _as_gesture(gesture)
    out = np.empty_like(g)
    n_links = len(graph.links)
    forces = np.zeros((g.size, n_links))
    link_vars = np.zeros((g.size, n_links))
    events = np.zeros((graph._events_cap, 3), dtype=np.int64)
    n_events = graph._advance(g, out, forces, link_vars, events)
    if n_events > events.shape[0]:
        raise RuntimeError("release event buffer overflow")
    return out, Trace(forces, link_vars, events[:n_events].copy())


# -- presets -----------------------------------------------------------------

def harmonic_modes(fundamental: float, t60s: Sequence[float],
                   gains: Sequence[float]) -> tuple[Mode, ...]:
    return tuple(Mode(fundamental * (k + 1), t, g) for k, (t, g) in enumerate(zip(t60s, gains)))


def _pluck_a_resonator() -> ModelGraph:
    res = ModalResonator((Mode(440.0, 1.0, 1.0), Mode(880.0, 0.7, 0.5), Mode(1320.0, 0.4, 0.25)))
    return ModelGraph(
        elements=(res,),
        links=(PluckLink(0, stiffness=2000.0, threshold=0.005, attach_offset=0.0),),
        listen=(0,),
        output_gain=250.0,
        name="PluckAResonator",
    )


def _touch_several_modal_resn() -> ModelGraph:
    resonators = tuple(
        ModalResonator(harmonic_modes(f0, (0.8, 0.5, 0.3), (1.0, 0.5, 0.25)))
        for f0 in (330.0, 440.0, 550.0)
    )
    links = tuple(
        TouchLink(i, stiffness=1000.0, damping=0.5, contact_offset=off)
        for i, off in enumerate((-0.02, 0.0, 0.02))
    )
    return ModelGraph(resonators, links, listen=(0, 1, 2), output_gain=20.0,
                      name="TouchSeveralModalResn")


def _scratch_mass_link_chain() -> ModelGraph:
    n = 8
    masses = tuple(PointMass(0.005) for _ in range(n))
    ends = [GROUND, *range(n), GROUND]
    springs = tuple(SpringDamper(a, b, stiffness=5000.0, damping=0.05)
                    for a, b in zip(ends[:-1], ends[1:]))
    # third mass of the chain is bowed, sixth is the listening point
    bow = FrictionLink(2, peak_force=0.5, v0=0.05)
    return ModelGraph(masses, springs + (bow,), listen=(5,), output_gain=600.0,
                      name="ScratchMassLinkChain")


HARP_SEMITONES = (0, 3, 5, 7, 10, 12, 15, 17, 19, 22)  # A minor pentatonic


def _pluck_harp10() -> ModelGraph:
    t60s = (1.2, 0.9, 0.6, 0.4, 0.3)
    gains = (1.0, 0.5, 1 / 3, 0.25, 0.2)
    resonators = tuple(
        ModalResonator(harmonic_modes(220.0 * 2.0 ** (s / 12.0), t60s, gains))
        for s in HARP_SEMITONES
    )
    offsets = np.linspace(-0.045, 0.045, 10)
    links = tuple(PluckLink(i, stiffness=2000.0, threshold=0.003, attach_offset=float(off))
                  for i, off in enumerate(offsets))
    return ModelGraph(resonators, links, listen=tuple(range(10)), output_gain=100.0,
                      name="PluckHarp10")


_BUILDERS = {
    "PluckAResonator": _pluck_a_resonator,
    "TouchSeveralModalResn": _touch_several_modal_resn,
    "ScratchMassLinkChain": _scratch_mass_link_chain,
    "PluckHarp10": _pluck_harp10,
}


def build_preset(preset: str) -> ModelGraph:
    """Construct one of the four instruments by exact (case-sensitive) name."""
    try:
        return _BUILDERS[preset]()
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}") from None
