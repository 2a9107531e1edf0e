"""Synthetic compressed-air-unit telemetry with plantable failure episodes.

Produces a 1 Hz sixteen-signal stream shaped like real APU logs: a reservoir
charged by an on/off compressor under hysteresis control, client air draws,
diurnal demand variation, tower swaps, and per-sensor noise textures.  Three
failure modes can be scheduled on the timeline; each leaks into the physics
(extra demand) and into the affected sensors with a short onset ramp ahead
of the logged failure window, so pre-failure signatures are learnable.

Everything is driven by one seeded generator: identical configs reproduce
identical streams byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

from .kernels import simulate_hysteresis
from .schema import (
    ANALOG_NAMES,
    ClassLabel,
    FailureEvent,
    RawSample,
    SIGNAL_INDEX,
    SIGNAL_NAMES,
)

DAY_S = 86_400
EPOCH_2022_01_01 = 1_640_995_200  # 2022-01-01 00:00:00 UTC


@dataclass(frozen=True)
class SynthEvent:
    """A failure episode at an offset (seconds) from stream start."""

    label: ClassLabel
    start_s: int
    end_s: int

    def __post_init__(self) -> None:
        if self.label == ClassLabel.NonFailure:
            raise ValueError("synthetic events must carry a failure class")
        if self.end_s <= self.start_s:
            raise ValueError("event must end after it starts")


def _at(day: float, hour: float) -> int:
    return int(day * DAY_S + hour * 3600)


# First episode sits inside the two-day selection burn-in on purpose: the
# variance freeze must tolerate failure samples the way a live deployment
# would.  It only touches sensors that pass selection anyway.
DEFAULT_EVENTS: tuple[SynthEvent, ...] = (
    SynthEvent(ClassLabel.OilLeakCompressor, _at(4, 18.0), _at(4, 22.0)),
    SynthEvent(ClassLabel.AirLeakDryer, _at(6, 8.0), _at(6, 12.0)),
    SynthEvent(ClassLabel.AirLeakClient, _at(7, 13.0), _at(7, 16.0)),
    SynthEvent(ClassLabel.OilLeakCompressor, _at(8, 8.0), _at(8, 13.0)),
)


@dataclass
class SynthConfig:
    days: float = 10.0
    start_epoch: int = EPOCH_2022_01_01
    seed: int = 20_220_101

    # reservoir / compressor duty cycle
    charge_rate: float = 0.040  # bar per second while compressor on
    base_demand: float = 0.0150
    diurnal_frac: float = 0.40  # demand swing over the day
    p_low: float = 7.0
    p_high: float = 11.0
    band_drift_amp: float = 1.7  # slow setpoint drift seen by gauges
    band_drift_period_s: int = DAY_S

    # client air draws (demand surges that also pulse the flowmeter)
    draw_gap_s: float = 45.0
    draw_dur_s: tuple[int, int] = (6, 14)
    draw_demand: tuple[float, float] = (0.025, 0.040)
    draw_flow: tuple[float, float] = (14.0, 30.0)

    # failure schedule and onset shaping
    events: tuple[SynthEvent, ...] = DEFAULT_EVENTS
    ramp_lead_s: int = 8_400  # signature onset ahead of the logged start
    ramp_len_s: int = 300
    decay_s: int = 300

    # one-off step change in sensor baselines (concept drift)
    baseline_shift_at_s: int | None = _at(7, 2.0)

    def __post_init__(self) -> None:
        horizon = int(self.days * DAY_S)
        for ev in self.events:
            if ev.end_s > horizon:
                raise ValueError(
                    f"event ending at {ev.end_s}s falls outside the "
                    f"{horizon}s stream"
                )


def _smooth_noise(rng, n: int, sigma: float, k: int) -> np.ndarray:
    """Correlated sensor noise: white noise washed with a k-sample boxcar."""
    if sigma <= 0:
        return np.zeros(n)
    raw = rng.normal(0.0, sigma, n)
    if k > 1:
        raw = np.convolve(raw, np.ones(k) / k, mode="same") * np.sqrt(k)
    return raw


def _wander(rng, n: int, sigma: float, knot_s: int) -> np.ndarray:
    """Piecewise-linear drift through random knots.

    Unlike filtered white noise this is locally monotone, so it adds slope
    reversals only at knot spacing; gap statistics stay controllable.
    """
    if sigma <= 0:
        return np.zeros(n)
    n_knots = n // knot_s + 2
    knots = np.arange(n_knots) * knot_s
    vals = rng.normal(0.0, sigma, n_knots)
    return np.interp(np.arange(n, dtype=np.float64), knots, vals)


def _pulse_train(
    rng, n: int, gap_s: float, dur: tuple[int, int], amp: tuple[float, float],
    rate_mod: np.ndarray | None = None,
) -> np.ndarray:
    """Poisson-spaced rectangular pulses; optional local rate modulation."""
    out = np.zeros(n)
    t = rng.exponential(gap_s)
    while t < n:
        i = int(t)
        scale = 1.0 if rate_mod is None else float(rate_mod[i])
        d = int(rng.integers(dur[0], dur[1] + 1))
        a = rng.uniform(amp[0], amp[1]) * scale
        out[i : i + d] += a
        t += rng.exponential(gap_s)
    return out


def _random_square(rng, n: int, period_lo: int, period_hi: int) -> np.ndarray:
    """0/1 wave flipping at random intervals (dryer tower alternation)."""
    out = np.empty(n, dtype=np.float64)
    state = 0.0
    i = 0
    while i < n:
        span = int(rng.integers(period_lo, period_hi + 1))
        out[i : i + span] = state
        state = 1.0 - state
        i += span
    return out


def _intensity(cfg: SynthConfig, n: int, label: ClassLabel) -> np.ndarray:
    """Onset envelope: ramps in before each logged window, decays after."""
    out = np.zeros(n)
    for ev in cfg.events:
        if ev.label != label:
            continue
        a = max(ev.start_s - cfg.ramp_lead_s, 0)
        b = min(a + cfg.ramp_len_s, n)
        out[a:b] = np.maximum(out[a:b], np.linspace(0.0, 1.0, b - a, endpoint=False))
        c = min(ev.end_s, n)
        out[b:c] = 1.0
        d = min(c + cfg.decay_s, n)
        out[c:d] = np.maximum(out[c:d], np.linspace(1.0, 0.0, d - c, endpoint=False))
    return out


@dataclass
class SynthStream:
    config: SynthConfig
    timestamps: np.ndarray  # int64 epoch seconds
    values: np.ndarray  # (n, 16) float64 in SIGNAL_NAMES order

    def __len__(self) -> int:
        return len(self.timestamps)

    def events(self) -> list[FailureEvent]:
        """The schedule as absolute-time events (what the YAML file holds)."""
        t0 = self.config.start_epoch
        return [
            FailureEvent(label=ev.label, start=t0 + ev.start_s, end=t0 + ev.end_s)
            for ev in self.config.events
        ]

    def iter_samples(self) -> Iterator[RawSample]:
        for i in range(len(self.timestamps)):
            yield RawSample(
                seq_id=i,
                timestamp=int(self.timestamps[i]),
                values=self.values[i],
            )

    def write_csv(self, path: str | Path) -> Path:
        """MetroPT-shaped CSV (gzipped when the suffix says so)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(self.values, columns=list(SIGNAL_NAMES))
        stamp = pd.to_datetime(self.timestamps, unit="s", utc=True)
        frame.insert(0, "timestamp", stamp.strftime("%Y-%m-%d %H:%M:%S"))
        frame.to_csv(
            path,
            index=False,
            float_format="%.3f",
            compression="infer",
        )
        return path


def generate(cfg: SynthConfig | None = None) -> SynthStream:
    cfg = cfg or SynthConfig()
    n = int(cfg.days * DAY_S)
    rng = np.random.default_rng(cfg.seed)
    t = np.arange(n, dtype=np.float64)

    i_oil = _intensity(cfg, n, ClassLabel.OilLeakCompressor)
    i_dryer = _intensity(cfg, n, ClassLabel.AirLeakDryer)
    i_client = _intensity(cfg, n, ClassLabel.AirLeakClient)

    # demand: diurnal base + correlated wander + client draws + leak losses
    diurnal = 1.0 + cfg.diurnal_frac * np.sin(2 * np.pi * (t / DAY_S) - 1.1)
    draw_demand = _pulse_train(
        rng, n, cfg.draw_gap_s, cfg.draw_dur_s, cfg.draw_demand, rate_mod=diurnal
    )
    demand = (
        cfg.base_demand * diurnal
        + _smooth_noise(rng, n, 0.0012, 31)
        + draw_demand
        + 0.007 * i_dryer
        + 0.006 * i_client
        + 0.002 * i_oil
    )
    demand = np.clip(demand, 0.002, None)

    pressure, comp_on = simulate_hysteresis(
        demand, cfg.p_low + 0.5, cfg.p_low, cfg.p_high, cfg.charge_rate
    )
    on = comp_on.astype(bool)
    duty = np.convolve(comp_on.astype(np.float64), np.ones(600) / 600, mode="same")

    # gauges see the true pressure plus a slow setpoint drift
    band = cfg.band_drift_amp * np.sin(
        2 * np.pi * t / cfg.band_drift_period_s + 0.7
    )
    gauge_p = pressure + band

    shift = np.zeros(n)
    if cfg.baseline_shift_at_s is not None and cfg.baseline_shift_at_s < n:
        shift[cfg.baseline_shift_at_s :] = 1.0

    out = np.zeros((n, 16), dtype=np.float64)

    def put(name: str, series: np.ndarray) -> None:
        out[:, SIGNAL_INDEX[name]] = series

    # --- analog -------------------------------------------------------------
    tp3 = gauge_p + _wander(rng, n, 0.010, 20)
    put("TP3", tp3)

    # compressor outlet: tracks reservoir while pumping, vents when idle
    tp2_on = gauge_p + 0.25 + _wander(rng, n, 0.012, 25) + 0.9 * shift
    put("TP2", np.where(on, tp2_on, 0.05))

    # separator pressure drop: big when air moves, leak keeps it pressurised;
    # the arch ripple keeps trough slopes steep so minima stay isolated
    h1_on = 8.2 + 1.2 * np.abs(np.sin(np.pi * t / 33.0)) + _wander(rng, n, 0.05, 47)
    h1 = np.where(on, h1_on, 0.02) + 5.5 * i_dryer - 1.2 * shift * on
    put("H1", np.clip(h1, 0.0, None))

    # motor current follows head pressure; oil problems load the motor
    mc_on = 8.0 + 0.9 * (gauge_p - 8.0) + _wander(rng, n, 0.12, 30)
    mc = np.where(on, mc_on, 0.15) + 2.2 * i_oil + 0.7 * shift * on
    put("MC", np.clip(mc, 0.0, None))

    # flow pulses on client draws plus a charging trickle
    draw_flow = _pulse_train(
        rng, n, cfg.draw_gap_s, cfg.draw_dur_s, cfg.draw_flow, rate_mod=diurnal
    )
    draw_flow *= 1.0 + 0.35 * shift
    flow = draw_flow + np.where(on, 4.0, 0.0) + 20.0 * i_client
    put("Flowmeter", flow)

    # oil temperature: slow thermal swings plus duty-cycle heating
    oil_t = (
        62.0
        + 3.0 * np.sin(2 * np.pi * t / 21_600.0 + 0.3)
        + 0.8 * duty
        + _wander(rng, n, 0.06, 40)
        + 9.0 * i_oil
        + 4.0 * shift
    )
    put("Oil temperature", oil_t)

    # dryer blow-off: a venting transient each time the compressor unloads,
    # a sustained bias when the dryer leaks
    unload = np.flatnonzero((~on[1:]) & on[:-1]) + 1
    blips = np.zeros(n)
    for idx in unload:
        dur = int(rng.integers(90, 150))
        amp = rng.uniform(2.0, 5.0)
        seg = min(dur, n - idx)
        blips[idx : idx + seg] = amp * np.linspace(1.0, 0.0, seg, endpoint=False)
    dv_p = 0.02 + blips + 1.8 * i_dryer
    put("DV pressure", dv_p)

    # downstream reservoir gauge: regulated nearly flat, amplitude-modulated
    # ripple keeps its spectrum alive without moving window means; V-shaped
    # bottoms (arch wave) so each trough yields exactly one minimum
    ripple_amp = 0.30 + 0.50 * 0.5 * (1 + np.sin(2 * np.pi * t / 10_800.0))
    arch = np.abs(np.sin(np.pi * t / 240.0))
    put("Reservoirs", 8.6 + ripple_amp * (arch - 2.0 / np.pi))

    # --- digital ------------------------------------------------------------
    put("COMP", 1.0 - comp_on)
    put("DV electric", np.roll(comp_on, 3).astype(np.float64))
    put("Towers", _random_square(rng, n, 700, 1_100))
    put("MPG", (pressure < cfg.p_low + 0.35).astype(np.float64))
    put("LPS", (pressure < cfg.p_low + 0.12).astype(np.float64))
    put("Caudal impulses", (draw_flow > 0.5).astype(np.float64))
    put("Pressure switch", np.zeros(n))
    put("Oil level", np.zeros(n))

    timestamps = cfg.start_epoch + np.arange(n, dtype=np.int64)
    return SynthStream(config=cfg, timestamps=timestamps, values=out)


def sawtooth_samples(
    period_s: int, days: float = 0.25, start_epoch: int = EPOCH_2022_01_01
) -> list[RawSample]:
    """Constant-gap stream: every analog dips once per period, exactly."""
    if period_s < 3:
        raise ValueError("period must be >= 3 seconds")
    n = int(days * DAY_S)
    t = np.arange(n, dtype=np.float64)
    tri = np.abs((t % period_s) - period_s / 2.0)
    values = np.zeros((n, 16))
    for name in ANALOG_NAMES:
        values[:, SIGNAL_INDEX[name]] = tri
    return [
        RawSample(seq_id=i, timestamp=start_epoch + i, values=values[i])
        for i in range(n)
    ]
