"""Synthetic measurement records.

Inputs are numbered so that ids ``2k`` and ``2k + 1`` form state pair ``k``;
a correlation point pairs the outcome-1 frequencies of the two inputs of a
pair under one measurement.

Sampling draws one binomial count per setting. Setting ``i`` gets its own
Philox stream keyed by ``(seed, i)``, so counts do not depend on the order
or the worker a setting is processed on.
"""
from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channels import D2Channel, Effect, QubitChannel, born
from .geometry import CorrelationData

PROB_TOL = 1e-9


@dataclass(frozen=True)
class Setting:
    input_id: int
    meas_id: int
    state: tuple
    effect: Effect

    def __post_init__(self):
        object.__setattr__(self, "state", tuple(float(x) for x in self.state))

    def probability(self, ch) -> float:
        return born(self.effect, ch.apply(self.state))


@dataclass(frozen=True)
class ProbeSetting:
    """Two input states measured with one binary effect."""

    pair_id: int
    meas_id: int
    state1: tuple
    state2: tuple
    effect: Effect

    def expand(self):
        return [
            Setting(2 * self.pair_id, self.meas_id, self.state1, self.effect),
            Setting(2 * self.pair_id + 1, self.meas_id, self.state2, self.effect),
        ]

    def correlation(self, ch):
        return (
            born(self.effect, ch.apply(self.state1)),
            born(self.effect, ch.apply(self.state2)),
        )


def expand(settings):
    out = []
    for s in settings:
        out.extend(s.expand() if isinstance(s, ProbeSetting) else [s])
    return out


# --- setting families ------------------------------------------------------

TOMOGRAPHY_STATES = {
    "H": (0.0, 0.0, 1.0),
    "V": (0.0, 0.0, -1.0),
    "+": (1.0, 0.0, 0.0),
    "-": (-1.0, 0.0, 0.0),
    "R": (0.0, 1.0, 0.0),
    "L": (0.0, -1.0, 0.0),
}
TOMOGRAPHY_AXES = {"z": (0.0, 0.0, 1.0), "x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0)}


def tomography_settings():
    """Six Pauli eigenstates, each measured along z, x and y (18 settings)."""
    out = []
    for i, state in enumerate(TOMOGRAPHY_STATES.values()):
        for j, axis in enumerate(TOMOGRAPHY_AXES.values()):
            out.append(Setting(i, j, state, Effect.projector(axis)))
    return out


def state_from_omega(omega):
    """Bloch vector of ``sqrt(w)|0> + sqrt(1 - w)|1>``."""
    if not -1e-12 <= omega <= 1.0 + 1e-12:
        raise ValueError(f"omega={omega} outside [0, 1]")
    omega = min(max(omega, 0.0), 1.0)
    return (2.0 * np.sqrt(omega * (1.0 - omega)), 0.0, 2.0 * omega - 1.0)


def grid_settings(n):
    """``n`` orthogonal XZ-plane state pairs times ``n`` XZ-plane projective measurements."""
    if n < 2:
        raise ValueError("grid needs n >= 2")
    thetas = np.pi * np.arange(n) / (n - 1)
    alphas = 2.0 * np.pi * np.arange(n) / n
    out = []
    for i, th in enumerate(thetas):
        v = (np.sin(th), 0.0, np.cos(th))
        w = tuple(-x for x in v)
        for j, al in enumerate(alphas):
            e = Effect.projector((np.sin(al), 0.0, np.cos(al)))
            out.append(ProbeSetting(i, j, v, w, e))
    return out


# --- boundary probes -------------------------------------------------------

OMEGA_CONVENTIONS = {
    "half-tan": lambda tg: 1.0 - tg / 2.0,
    "inverse": lambda tg: 1.0 / (1.0 + tg),
}
EFFICIENCY_READINGS = ("literal", "complement")


def probe_projector(lam, omega, reading="complement"):
    """Bloch direction of the boundary-probing projector for states with ``omega``.

    ``reading="literal"`` puts ``lam`` into the projector formula as printed;
    ``"complement"`` uses ``1 - lam``, matching the damping convention of
    :func:`channels.amplitude_damping`.
    """
    eta = lam if reading == "literal" else 1.0 - lam
    num = 2.0 * np.sqrt(max(eta * omega * (1.0 - omega), 0.0))
    den = 2.0 * omega - 1.0 + np.sqrt(max(1.0 - 4.0 * omega * (1.0 - omega) * (1.0 - eta), 0.0))
    if abs(den) < 1e-12:
        raise ZeroDivisionError(f"degenerate projector for lam={lam}, omega={omega}")
    k = num / den
    return np.array([2.0 * k, 0.0, 1.0 - k * k]) / (1.0 + k * k)


def boundary_probe(lam, gamma, convention=None):
    """Probe setting whose correlation lies on the amplitude-damping boundary.

    ``gamma`` must lie on one of the two curved arcs, ``[-pi/4, pi/4]`` or
    ``[3pi/4, 5pi/4]``. The printed state parametrization only yields a
    valid ``omega`` for ``tan(gamma) >= 0``; the other half of each arc is
    reached by swapping the two states (mirror ``p11 <-> p12``), and the
    second arc by relabelling the outcomes (``p -> 1 - p``).
    """
    omega_conv, reading = convention or probe_convention()
    g = float(np.mod(gamma + np.pi / 4.0, 2.0 * np.pi)) - np.pi / 4.0
    second = False
    if g > np.pi / 4.0 + 1e-12:
        g -= np.pi
        second = True
    if abs(g) > np.pi / 4.0 + 1e-12:
        raise ValueError(f"gamma={gamma} is outside the curved arcs")
    tg = min(abs(np.tan(g)), 1.0)
    omega = OMEGA_CONVENTIONS[omega_conv](tg)
    v = state_from_omega(omega)
    w = tuple(-x for x in v)
    e = Effect.projector(probe_projector(lam, omega, reading))
    if g < 0.0:
        v, w = w, v
    if second:
        e = e.complement()
    return ProbeSetting(0, 0, v, w, e)


def probe_errors(omega_conv, reading, lams=(0.2, 0.5, 0.8), n_gamma=20):
    """Largest boundary margin of probe points, per damping value."""
    from .channels import amplitude_damping
    from .geometry import boundary

    out = {}
    for lam in lams:
        ch = amplitude_damping(lam)
        region = boundary(ch)
        worst = 0.0
        for gamma in np.linspace(-np.pi / 4, np.pi / 4, n_gamma):
            try:
                probe = boundary_probe(lam, gamma, (omega_conv, reading))
            except (ValueError, ZeroDivisionError):
                worst = np.inf
                break
            worst = max(worst, abs(region.margin(probe.correlation(ch))))
        out[lam] = worst
    return out


@functools.lru_cache(maxsize=1)
def probe_convention(tol=1e-4):
    """Pick the first (omega convention, efficiency reading) whose probes sit on the boundary."""
    for reading in EFFICIENCY_READINGS:
        for omega_conv in OMEGA_CONVENTIONS:
            errs = probe_errors(omega_conv, reading)
            if max(errs.values()) <= tol:
                return omega_conv, reading
    raise RuntimeError("no probe convention reproduces the boundary")


# --- sampling --------------------------------------------------------------


def setting_stream(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass
class CountsTable:
    """Outcome-1 counts per setting; outcome 2 is ``shots - count``."""

    settings: list
    counts: np.ndarray
    shots: np.ndarray
    seed: int = None
    channel: dict = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.shots = np.broadcast_to(np.asarray(self.shots, dtype=np.int64), self.counts.shape).copy()
        if np.any(self.counts < 0) or np.any(self.counts > self.shots):
            raise ValueError("counts must lie in [0, shots]")

    def __len__(self):
        return len(self.settings)

    def records(self):
        """``(input_id, meas_id, outcome, count)`` rows, outcomes 1 and 2."""
        rows = []
        for s, n, k in zip(self.settings, self.counts, self.shots):
            rows.append((s.input_id, s.meas_id, 1, int(n)))
            rows.append((s.input_id, s.meas_id, 2, int(k - n)))
        return rows


def exact_probabilities(ch, settings):
    settings = expand(settings)
    return np.array([s.probability(ch) for s in settings])


def simulate_counts(ch, settings, shots, seed):
    if shots < 1:
        raise ValueError("shots must be >= 1")
    settings = expand(settings)
    probs = exact_probabilities(ch, settings)
    if np.any(probs < -PROB_TOL) or np.any(probs > 1.0 + PROB_TOL):
        raise RuntimeError("probability outside [0, 1]; channel or settings unphysical")
    probs = np.clip(probs, 0.0, 1.0)
    counts = np.array([setting_stream(seed, i).binomial(shots, p) for i, p in enumerate(probs)], dtype=np.int64)
    return CountsTable(settings, counts, shots, seed, channel=channel_spec(ch))


def channel_spec(ch):
    if isinstance(ch, D2Channel):
        return {"kind": "d2", "d": [ch.d1, ch.d2, ch.d3], "c3": ch.c3}
    if isinstance(ch, QubitChannel):
        return {"kind": "affine", "A": ch.A.tolist(), "b": ch.b.tolist()}
    return None


@dataclass
class FrequencyTable:
    settings: list
    f: np.ndarray
    sigma: np.ndarray
    shots: np.ndarray

    def __len__(self):
        return len(self.settings)


def frequencies(c: CountsTable) -> FrequencyTable:
    if len(c) == 0:
        return FrequencyTable([], np.empty(0), np.empty(0), np.empty(0, dtype=np.int64))
    keep = c.shots > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} settings with zero shots")
    settings = [s for s, k in zip(c.settings, keep) if k]
    n = c.counts[keep].astype(float)
    k = c.shots[keep].astype(float)
    f = n / k
    sigma = np.sqrt(f * (1.0 - f) / k)
    edge = (n == 0) | (n == k)
    sigma[edge] = 0.5 * np.sqrt(1.0 / k[edge])
    return FrequencyTable(settings, f, sigma, c.shots[keep])


def exact_frequencies(ch, settings) -> FrequencyTable:
    settings = expand(settings)
    p = np.clip(exact_probabilities(ch, settings), 0.0, 1.0)
    return FrequencyTable(settings, p, np.zeros_like(p), np.zeros(len(p), dtype=np.int64))


def to_points(freq: FrequencyTable) -> CorrelationData:
    """Pair inputs ``2k`` and ``2k + 1`` under each measurement."""
    index = {(s.input_id, s.meas_id): i for i, s in enumerate(freq.settings)}
    rows, sig, pid, mid = [], [], [], []
    for (inp, meas), i in sorted(index.items()):
        if inp % 2:
            continue
        j = index.get((inp + 1, meas))
        if j is None:
            continue
        rows.append((freq.f[i], freq.f[j]))
        sig.append((freq.sigma[i], freq.sigma[j]))
        pid.append(inp // 2)
        mid.append(meas)
    if not rows:
        return CorrelationData(np.empty((0, 2)), np.empty((0, 2)), np.empty(0, dtype=int), np.empty(0, dtype=int))
    return CorrelationData(np.array(rows), np.array(sig), np.array(pid), np.array(mid))


def exact_points(ch, probes) -> CorrelationData:
    return to_points(exact_frequencies(ch, probes))
