"""Aggregate grid frequency dynamics after power imbalances.

Models the system as a single aggregate machine:

- inertia opposes the imbalance and bounds the rate of change of frequency,
- a droop fleet responds proportionally to the deviation,
- a fast containment reserve ramps in under a 30 s activation envelope,
- a slower restoration reserve takes over and returns frequency to nominal.

All dynamics are deterministic; a run is a pure function of its inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SimulationError

# Containment-reserve activation envelope: half output after 15 s, full
# output after 30 s, which is a constant ramp rate of capacity/30 per second.
FCR_T_HALF_S = 15.0
FCR_T_FULL_S = 30.0

# Dead band applied when the simulation has no droop fleet to take one from.
DEFAULT_DEAD_BAND_HZ = 0.02


class ZeroInertiaError(SimulationError):
    """A power step on a zero-inertia system implies infinite ROCOF."""


@dataclass(frozen=True)
class SystemParameters:
    """Aggregate grid model: nominal frequency, size, inertia and damping."""

    f_n: float = 50.0                 # nominal frequency, Hz
    s_base_mva: float = 100.0         # system base power, MVA
    h_sys_s: float = 5.0              # aggregate inertia constant, s
    damping_pu_per_hz: float = 0.0    # load self-regulation, pu power per Hz
    band_half_width_hz: float = 0.5   # allowed deviation around f_n, Hz

    def __post_init__(self):
        violations = check_system_parameters(
            self.f_n, self.s_base_mva, self.h_sys_s,
            self.damping_pu_per_hz, self.band_half_width_hz)
        if violations:
            raise InvalidInputError("; ".join(violations))


def check_system_parameters(f_n, s_base_mva, h_sys_s, damping_pu_per_hz,
                            band_half_width_hz, prefix="system"):
    """Return all invariant violations for a parameter set (empty if valid)."""
    out = []
    if not (isinstance(f_n, (int, float)) and math.isfinite(f_n) and f_n > 0):
        out.append(f"{prefix}.f_n: must be finite and > 0")
    if not (math.isfinite(s_base_mva) and s_base_mva > 0):
        out.append(f"{prefix}.s_base_mva: must be finite and > 0")
    if not (math.isfinite(h_sys_s) and h_sys_s >= 0):
        out.append(f"{prefix}.h_sys_s: must be finite and >= 0")
    if not (math.isfinite(damping_pu_per_hz) and damping_pu_per_hz >= 0):
        out.append(f"{prefix}.damping_pu_per_hz: must be finite and >= 0")
    if not (math.isfinite(band_half_width_hz) and band_half_width_hz > 0):
        out.append(f"{prefix}.band_half_width_hz: must be finite and > 0")
    return out


@dataclass(frozen=True)
class DroopCurve:
    """Piecewise-linear P(f) control law with a dead band around nominal.

    Powers are per unit of the providing unit's rating. Below f_min the
    output clamps to p_max, above f_max it clamps to p_min.
    """

    f_n: float                        # Hz
    dead_band_half_width: float       # Hz
    p_nominal: float                  # pu output inside the dead band
    p_max: float                      # pu output at and below f_min
    f_min: float                      # Hz, under-frequency anchor
    p_min: float                      # pu output at and above f_max
    f_max: float                      # Hz, over-frequency anchor

    def __post_init__(self):
        violations = check_droop_curve(
            self.f_n, self.dead_band_half_width, self.p_nominal,
            self.p_max, self.f_min, self.p_min, self.f_max)
        if violations:
            raise InvalidInputError("; ".join(violations))


def check_droop_curve(f_n, dead_band_half_width, p_nominal, p_max, f_min,
                      p_min, f_max, prefix="curve"):
    out = []
    values = [f_n, dead_band_half_width, p_nominal, p_max, f_min, p_min, f_max]
    if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in values):
        out.append(f"{prefix}: all fields must be finite numbers")
        return out
    if f_n <= 0:
        out.append(f"{prefix}.f_n: must be > 0")
    if dead_band_half_width < 0:
        out.append(f"{prefix}.dead_band_half_width: must be >= 0")
    if f_min >= f_n - dead_band_half_width:
        out.append(f"{prefix}.f_min: must be < f_n - dead_band_half_width")
    if f_max <= f_n + dead_band_half_width:
        out.append(f"{prefix}.f_max: must be > f_n + dead_band_half_width")
    if not (p_min <= p_nominal <= p_max):
        out.append(f"{prefix}.p_nominal: must satisfy p_min <= p_nominal <= p_max")
    return out


@dataclass(frozen=True)
class RatedDroopCurve:
    """A droop curve scaled by the MW rating of the providing fleet share."""

    curve: DroopCurve
    rating_mw: float

    def __post_init__(self):
        if not (math.isfinite(self.rating_mw) and self.rating_mw >= 0):
            raise InvalidInputError("rating_mw: must be finite and >= 0")


@dataclass(frozen=True)
class FcrProduct:
    """Frequency containment reserve with the fixed 15 s / 30 s ramp."""

    capacity_mw: float

    def __post_init__(self):
        if not (math.isfinite(self.capacity_mw) and self.capacity_mw >= 0):
            raise InvalidInputError("fcr.capacity_mw: must be finite and >= 0")


@dataclass(frozen=True)
class SecondaryReserve:
    """Slow restoration reserve: long activation, sustained delivery.

    sustain_duration_s states how long full delivery must be held; the
    simulation keeps the reserve deployed for the whole horizon since
    the replacing tertiary process is out of scope.
    """

    capacity_mw: float
    full_activation_time_s: float = 300.0
    sustain_duration_s: float = 900.0

    def __post_init__(self):
        violations = check_secondary_reserve(
            self.capacity_mw, self.full_activation_time_s, self.sustain_duration_s)
        if violations:
            raise InvalidInputError("; ".join(violations))


def check_secondary_reserve(capacity_mw, full_activation_time_s,
                            sustain_duration_s, prefix="secondary"):
    out = []
    if not (math.isfinite(capacity_mw) and capacity_mw >= 0):
        out.append(f"{prefix}.capacity_mw: must be finite and >= 0")
    if not (math.isfinite(full_activation_time_s) and full_activation_time_s > FCR_T_FULL_S):
        out.append(f"{prefix}.full_activation_time_s: must be > {FCR_T_FULL_S:g}")
    if not (math.isfinite(sustain_duration_s) and sustain_duration_s >= 0):
        out.append(f"{prefix}.sustain_duration_s: must be finite and >= 0")
    return out


@dataclass(frozen=True)
class DisturbanceEvent:
    """Step power imbalance; negative delta_p_pu means lost generation."""

    t_event_s: float
    delta_p_pu: float

    def __post_init__(self):
        violations = check_disturbance_event(self.t_event_s, self.delta_p_pu)
        if violations:
            raise InvalidInputError("; ".join(violations))


def check_disturbance_event(t_event_s, delta_p_pu, prefix="event"):
    out = []
    if not (math.isfinite(t_event_s) and t_event_s >= 0):
        out.append(f"{prefix}.t_event_s: must be finite and >= 0")
    if not math.isfinite(delta_p_pu):
        out.append(f"{prefix}.delta_p_pu: must be finite")
    return out


@dataclass
class FrequencyTrace:
    """Fixed-step frequency time series with forward-difference ROCOF."""

    t: np.ndarray        # s
    f: np.ndarray        # Hz
    rocof: np.ndarray    # Hz/s, rocof[i] = (f[i+1] - f[i]) / dt
    dt: float

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_frequencies(cls, t: np.ndarray, f: np.ndarray, dt: float) -> "FrequencyTrace":
        if len(t) < 2:
            raise InvalidInputError("trace: needs at least two samples")
        rocof = np.empty_like(f)
        rocof[:-1] = np.diff(f) / dt
        rocof[-1] = rocof[-2]
        return cls(t=t, f=f, rocof=rocof, dt=dt)

    def to_rows(self):
        return zip(self.t.tolist(), self.f.tolist(), self.rocof.tolist())


@dataclass(frozen=True)
class TraceMetrics:
    """Stability summary extracted from one simulated trace."""

    nadir_hz: float
    max_abs_rocof_hz_per_s: float
    time_outside_band_s: float
    settled: bool


def evaluate_droop(curve: DroopCurve, f: float) -> float:
    """Power output (pu) of a droop curve at frequency f.

    Nominal power inside the dead band, linear toward each anchor outside
    it, clamped beyond the anchors.
    """
    if not (isinstance(f, (int, float)) and math.isfinite(f)):
        raise InvalidInputError("f: must be a finite frequency")
    lo = curve.f_n - curve.dead_band_half_width
    hi = curve.f_n + curve.dead_band_half_width
    if lo <= f <= hi:
        return curve.p_nominal
    if f < lo:
        if f <= curve.f_min:
            return curve.p_max
        # linear between (f_min, p_max) and (lo, p_nominal)
        return curve.p_max + (f - curve.f_min) * (curve.p_nominal - curve.p_max) / (lo - curve.f_min)
    if f >= curve.f_max:
        return curve.p_min
    return curve.p_nominal + (f - hi) * (curve.p_min - curve.p_nominal) / (curve.f_max - hi)


def fcr_ramp_output(t_since_activation_s: float, product: FcrProduct) -> float:
    """Containment-reserve output (MW) t seconds after the activation trigger."""
    if not (math.isfinite(t_since_activation_s) and t_since_activation_s >= 0):
        raise InvalidInputError("t_since_activation_s: must be finite and >= 0")
    return product.capacity_mw * min(t_since_activation_s / FCR_T_FULL_S, 1.0)


def inertial_power(h_s: float, rocof_hz_per_s: float, f_n: float,
                   s_base_mva: float) -> float:
    """Inertial power exchange (MW) for a given ROCOF.

    P = 2 * H * (S / f_n) * ROCOF; sign follows the ROCOF sign.
    """
    if not (math.isfinite(f_n) and f_n > 0):
        raise InvalidInputError("f_n: must be finite and > 0")
    if not (math.isfinite(h_s) and h_s >= 0):
        raise InvalidInputError("h_s: must be finite and >= 0")
    if not math.isfinite(rocof_hz_per_s) or not math.isfinite(s_base_mva):
        raise InvalidInputError("rocof and s_base must be finite")
    return 2.0 * h_s * (s_base_mva / f_n) * rocof_hz_per_s


def _fleet_dead_band(droop_fleet: list[RatedDroopCurve]) -> float:
    if not droop_fleet:
        return DEFAULT_DEAD_BAND_HZ
    return min(r.curve.dead_band_half_width for r in droop_fleet)


class _ReserveController:
    """Algebraic reserve injections for one simulation run.

    The containment reserve deploys proportionally to the frequency
    deviation (full deployment at the band edge) but never faster than
    the fixed activation envelope. The restoration reserve pursues a
    demand that covers the disturbance plus a frequency-bias term, rate
    limited by its own activation time, which returns frequency to
    nominal and releases the spent containment reserve as it does so.
    """

    # Tracking bandwidth of the restoration reserve, 1/s. Fast enough to
    # lock onto its demand, slow enough to keep the dynamics smooth.
    K_TRACK = 1.0

    def __init__(self, params: SystemParameters, event: DisturbanceEvent,
                 fcr: FcrProduct, secondary: SecondaryReserve,
                 droop_fleet: list[RatedDroopCurve]):
        self.params = params
        self.event = event
        self.fcr = fcr
        self.secondary = secondary
        self.fleet = list(droop_fleet)
        self.dead_band = _fleet_dead_band(self.fleet)
        self.fcr_rate = fcr.capacity_mw / FCR_T_FULL_S
        self.sec_rate = secondary.capacity_mw / secondary.full_activation_time_s
        self.sec_bias_mw_per_hz = secondary.capacity_mw / params.band_half_width_hz
        self.cover_mw = -event.delta_p_pu * params.s_base_mva
        # Baseline fleet output; only the change relative to it injects power.
        self.fleet_base = [r.rating_mw * evaluate_droop(r.curve, params.f_n)
                           for r in self.fleet]
        self.t_activation: float | None = None

    def fleet_power_mw(self, f: float) -> float:
        return sum(r.rating_mw * evaluate_droop(r.curve, f) - base
                   for r, base in zip(self.fleet, self.fleet_base))

    def fcr_demand_mw(self, f: float) -> float:
        dev = self.params.f_n - f
        if abs(dev) <= self.dead_band:
            return 0.0
        span = max(self.params.band_half_width_hz - self.dead_band, 1e-9)
        frac = (abs(dev) - self.dead_band) / span
        return math.copysign(self.fcr.capacity_mw * min(frac, 1.0), dev)

    def fcr_power_mw(self, t: float, f: float) -> float:
        if self.t_activation is None or t < self.t_activation:
            return 0.0
        envelope = self.fcr_rate * (t - self.t_activation)
        demand = self.fcr_demand_mw(f)
        return max(-envelope, min(envelope, demand))

    def sec_start_time(self) -> float | None:
        if self.t_activation is None:
            return None
        return self.t_activation + FCR_T_FULL_S

    def sec_demand_mw(self, f: float) -> float:
        demand = self.cover_mw + self.sec_bias_mw_per_hz * (self.params.f_n - f)
        cap = self.secondary.capacity_mw
        return max(-cap, min(cap, demand))

    def sec_rate_mw_per_s(self, t: float, f: float, p_sec: float) -> float:
        start = self.sec_start_time()
        if start is None or t < start:
            return 0.0
        wanted = self.K_TRACK * (self.sec_demand_mw(f) - p_sec)
        return max(-self.sec_rate, min(self.sec_rate, wanted))

    def net_power_mw(self, t: float, f: float, p_sec: float) -> float:
        p = 0.0
        if t >= self.event.t_event_s:
            p += self.event.delta_p_pu * self.params.s_base_mva
        p += self.fleet_power_mw(f)
        p += self.fcr_power_mw(t, f)
        p += p_sec
        p -= self.params.damping_pu_per_hz * (f - self.params.f_n) * self.params.s_base_mva
        return p


def simulate_disturbance(params: SystemParameters, event: DisturbanceEvent,
                         fcr: FcrProduct, secondary: SecondaryReserve,
                         droop_fleet: list[RatedDroopCurve] | None = None,
                         horizon_s: float = 60.0, dt_s: float = 0.01) -> FrequencyTrace:
    """Simulate frequency after a step imbalance and return the trace.

    Integrates the aggregate swing equation

        df/dt = f_n * P_net / (2 * h_sys * s_base)

    with explicit RK4 at a fixed step. P_net collects the disturbance,
    droop-fleet response, containment and restoration reserves, and load
    damping. Frequency is flat at f_n before the event. The containment
    reserve activates the first time |f - f_n| leaves the droop dead band;
    the activation instant is located by interpolation inside the step so
    the trace converges cleanly as dt shrinks.
    """
    droop_fleet = droop_fleet or []
    if dt_s <= 0:
        raise InvalidInputError("dt_s: must be > 0")
    if horizon_s <= event.t_event_s:
        raise InvalidInputError("horizon_s: must exceed event.t_event_s")
    n = int(round(horizon_s / dt_s)) + 1
    t = np.arange(n) * dt_s
    f = np.full(n, params.f_n, dtype=float)

    if event.delta_p_pu == 0.0:
        return FrequencyTrace.from_frequencies(t, f, dt_s)
    if params.h_sys_s == 0.0:
        raise ZeroInertiaError(
            "zero system inertia with a nonzero power step implies infinite ROCOF")

    ctrl = _ReserveController(params, event, fcr, secondary, droop_fleet)
    denom = 2.0 * params.h_sys_s * params.s_base_mva
    f_n = params.f_n

    def rhs(tt, ff, p_sec):
        dfdt = f_n * ctrl.net_power_mw(tt, ff, p_sec) / denom
        dpdt = ctrl.sec_rate_mw_per_s(tt, ff, p_sec)
        return dfdt, dpdt

    def rk4_step(t0, h, ff, p_sec):
        k1f, k1p = rhs(t0, ff, p_sec)
        k2f, k2p = rhs(t0 + h / 2, ff + k1f * h / 2, p_sec + k1p * h / 2)
        k3f, k3p = rhs(t0 + h / 2, ff + k2f * h / 2, p_sec + k2p * h / 2)
        k4f, k4p = rhs(t0 + h, ff + k3f * h, p_sec + k3p * h)
        return (ff + h * (k1f + 2 * k2f + 2 * k3f + k4f) / 6.0,
                p_sec + h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0)

    def note_dead_band_crossing(t0, h, dev_before, dev_after):
        if ctrl.t_activation is not None or dev_after <= ctrl.dead_band:
            return
        # Locate the crossing inside the step by linear interpolation.
        if dev_after > dev_before:
            frac = (ctrl.dead_band - dev_before) / (dev_after - dev_before)
            frac = min(max(frac, 0.0), 1.0)
        else:
            frac = 0.0
        ctrl.t_activation = t0 + frac * h

    # The pre-event system sits exactly at equilibrium; integration starts
    # at the event instant so the sample there is still f_n and the step
    # change acts only forward in time.
    i_event = int(np.searchsorted(t, event.t_event_s, side="left"))
    fi = params.f_n
    p_sec = 0.0
    if i_event < n and t[i_event] > event.t_event_s + 1e-15:
        h = t[i_event] - event.t_event_s
        dev0 = abs(fi - f_n)
        fi, p_sec = rk4_step(event.t_event_s, h, fi, p_sec)
        f[i_event] = fi
        note_dead_band_crossing(event.t_event_s, h, dev0, abs(fi - f_n))
    for i in range(i_event, n - 1):
        dev0 = abs(fi - f_n)
        fi, p_sec = rk4_step(t[i], dt_s, fi, p_sec)
        f[i + 1] = fi
        note_dead_band_crossing(t[i], dt_s, dev0, abs(fi - f_n))

    return FrequencyTrace.from_frequencies(t, f, dt_s)


def trace_metrics(trace: FrequencyTrace, params: SystemParameters) -> TraceMetrics:
    """Nadir, worst ROCOF, time spent outside the band, and settling flag."""
    if len(trace) == 0:
        raise InvalidInputError("trace: must be non-empty")
    dev = np.abs(trace.f - params.f_n)
    outside = dev > params.band_half_width_hz
    tail = max(1, int(math.ceil(len(trace) * 0.1)))
    return TraceMetrics(
        nadir_hz=float(np.min(trace.f)),
        max_abs_rocof_hz_per_s=float(np.max(np.abs(trace.rocof))),
        time_outside_band_s=float(np.count_nonzero(outside) * trace.dt),
        settled=bool(not outside[-tail:].any()),
    )


# Forecast inertia levels by country, mapped to representative aggregate
# inertia constants: midpoint of two-sided ranges, the finite bound for
# one-sided ones.
INERTIA_PRESETS_2030 = {
    "belgium": 2.0, "croatia": 2.0, "germany": 2.0, "greece": 2.0,
    "ireland": 2.0, "italy": 2.0, "luxembourg": 2.0, "portugal": 2.0,
    "spain": 2.0, "united_kingdom": 2.0,
    "austria": 2.5, "albania": 2.5, "bulgaria": 2.5, "denmark": 2.5,
    "netherlands": 2.5, "switzerland": 2.5,
    "bosnia_and_herzegovina": 3.5, "finland": 3.5, "france": 3.5,
    "latvia": 3.5, "norway": 3.5, "romania": 3.5, "sweden": 3.5,
    "estonia": 4.0, "hungary": 4.0, "montenegro": 4.0, "poland": 4.0,
    "slovakia": 4.0, "serbia": 4.0,
}


def inertia_preset_2030(country: str, s_base_mva: float = 100.0) -> SystemParameters:
    """System parameters using the 2030 inertia outlook for a country."""
    key = country.strip().lower().replace(" ", "_")
    if key not in INERTIA_PRESETS_2030:
        raise InvalidInputError(f"unknown country preset: {country!r}")
    return SystemParameters(f_n=50.0, s_base_mva=s_base_mva,
                            h_sys_s=INERTIA_PRESETS_2030[key])
