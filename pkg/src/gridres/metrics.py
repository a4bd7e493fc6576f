"""Resilience quantities over simulation outputs.

Turns frequency traces and restoration timelines into service-level
trajectories, integrates degradation area, annotates the four inner-loop
phases (Defend, Detect, Remediate, Recover) and projects runs into the
state-vs-service plane.

The frequency-to-service mapping is a toolkit convention (linear ramp
from the band edge down to a configurable floor deviation), not a
physical law; callers can substitute their own.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .frequency import FrequencyTrace, SystemParameters

DEFAULT_FLOOR_DEVIATION_HZ = 2.5


@dataclass(frozen=True)
class ServicePoint:
    t: float
    level: float          # fraction of required service in [0, 1]
    label: str            # operational-state label


@dataclass(frozen=True)
class ServiceTrajectory:
    """Time-indexed service level with operational-state labels."""

    points: tuple[ServicePoint, ...]

    def __post_init__(self):
        violations = []
        prev_t = -math.inf
        for i, p in enumerate(self.points):
            if not (math.isfinite(p.t) and p.t > prev_t):
                violations.append(f"points[{i}].t: must be finite and strictly increasing")
            prev_t = p.t
            if not (0.0 <= p.level <= 1.0):
                violations.append(f"points[{i}].level: must be in [0, 1]")
        if violations:
            raise InvalidInputError("; ".join(violations))

    def __len__(self):
        return len(self.points)

    @property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def level(self) -> np.ndarray:
        return np.array([p.level for p in self.points])


@dataclass(frozen=True)
class PhaseInterval:
    phase: str            # Defend | Detect | Remediate | Recover
    t_start: float
    t_end: float


@dataclass(frozen=True)
class PhaseAnnotation:
    """Ordered, non-overlapping inner-loop phase intervals plus durations."""

    intervals: tuple[PhaseInterval, ...]
    detection_latency_s: float
    activation_time_s: float
    remediation_time_s: float
    recovery_time_s: float


@dataclass(frozen=True)
class StatePoint:
    degradation: float    # fraction of system state lost, in [0, 1]
    level: float          # service level in [0, 1]


@dataclass(frozen=True)
class StateTransition:
    kind: str             # challenge | remediation | recovery
    start: StatePoint
    end: StatePoint


@dataclass(frozen=True)
class StateSpacePath:
    points: tuple[StatePoint, ...]
    transitions: tuple[StateTransition, ...]


def degradation_area(trajectory: ServiceTrajectory, baseline: float = 1.0,
                     clip: bool = False) -> float:
    """Trapezoidal area between the baseline and the service level.

    The deficit max(baseline - level, 0) is evaluated at the trajectory
    samples and integrated over the span. Lower area means a more
    resilient response to the same challenge. Unless clip is set, the
    baseline must dominate every sample.
    """
    if len(trajectory) == 0:
        raise InvalidInputError("trajectory: must be non-empty")
    level = trajectory.level
    if not clip and float(level.max()) > baseline + 1e-12:
        raise InvalidInputError(
            "baseline: below the trajectory maximum; pass clip=True to clamp")
    if len(trajectory) == 1:
        return 0.0
    deficit = np.maximum(baseline - level, 0.0)
    return float(np.trapezoid(deficit, trajectory.t))


def service_from_frequency(trace: FrequencyTrace, params: SystemParameters,
                           floor_deviation_hz: float = DEFAULT_FLOOR_DEVIATION_HZ,
                           ) -> ServiceTrajectory:
    """Map a frequency trace to service level.

    Full service inside the allowed band, linear decline from the band
    edge to zero at the floor deviation, zero beyond.
    """
    if not (math.isfinite(floor_deviation_hz)
            and floor_deviation_hz > params.band_half_width_hz):
        raise InvalidInputError(
            "floor_deviation_hz: must exceed the band half width")
    band = params.band_half_width_hz
    span = floor_deviation_hz - band
    points = []
    for t, f in zip(trace.t.tolist(), trace.f.tolist()):
        dev = abs(f - params.f_n)
        if dev <= band:
            level, label = 1.0, "in_band"
        elif dev >= floor_deviation_hz:
            level, label = 0.0, "floor"
        else:
            level, label = 1.0 - (dev - band) / span, "outside_band"
        points.append(ServicePoint(t=t, level=level, label=label))
    return ServiceTrajectory(points=tuple(points))


def service_from_restoration(timeline, total_load_mw: float) -> ServiceTrajectory:
    """Served-load fraction over a restoration timeline, labeled by stage."""
    if not (math.isfinite(total_load_mw) and total_load_mw > 0):
        raise InvalidInputError("total_load_mw: must be > 0")
    points = []
    last_t = -math.inf
    for ev in timeline.events:
        t = ev.t_s
        if t <= last_t:  # events may share a timestamp; nudge for strictness
            t = math.nextafter(last_t, math.inf)
        last_t = t
        points.append(ServicePoint(
            t=t, level=min(ev.served_total_mw / total_load_mw, 1.0),
            label=ev.stage))
    return ServiceTrajectory(points=tuple(points))


def annotate_phases(trajectory: ServiceTrajectory, challenge_t: float,
                    detection_t: float, remediation_start_t: float,
                    recovery_complete_t: float) -> PhaseAnnotation:
    """Partition the trajectory span into the four inner-loop phases.

    Defend runs until the challenge, Detect until detection, Remediate
    until recovery completes, Recover to the end of the span. Also
    reports the four durations (detection latency, activation time,
    remediation time, recovery time).
    """
    if len(trajectory) == 0:
        raise InvalidInputError("trajectory: must be non-empty")
    t0 = trajectory.points[0].t
    t_end = trajectory.points[-1].t
    marks = [t0, challenge_t, detection_t, remediation_start_t,
             recovery_complete_t, t_end]
    if any(b < a for a, b in zip(marks, marks[1:])):
        raise InvalidInputError(
            "events: must be ordered challenge <= detection <= remediation "
            "start <= recovery complete within the trajectory span")
    intervals = (
        PhaseInterval("Defend", t0, challenge_t),
        PhaseInterval("Detect", challenge_t, detection_t),
        PhaseInterval("Remediate", detection_t, recovery_complete_t),
        PhaseInterval("Recover", recovery_complete_t, t_end),
    )
    return PhaseAnnotation(
        intervals=intervals,
        detection_latency_s=detection_t - challenge_t,
        activation_time_s=remediation_start_t - detection_t,
        remediation_time_s=recovery_complete_t - remediation_start_t,
        recovery_time_s=t_end - recovery_complete_t,
    )


def phase_at(annotation: PhaseAnnotation, t: float) -> str:
    """Phase name covering time t (final interval closed on the right)."""
    for iv in annotation.intervals:
        if iv.t_start <= t < iv.t_end:
            return iv.phase
    return annotation.intervals[-1].phase


def state_space_path(trajectory: ServiceTrajectory,
                     state_metric: dict[str, float]) -> StateSpacePath:
    """Project a labeled trajectory into the (degradation, service) plane.

    Emits one point per sample where either coordinate changes, with
    transitions labeled challenge (worse state or lower service),
    recovery (state improves) or remediation (service improves at equal
    state).
    """
    if len(trajectory) == 0:
        raise InvalidInputError("trajectory: must be non-empty")
    missing = sorted({p.label for p in trajectory.points} - set(state_metric))
    if missing:
        raise InvalidInputError(f"state_metric: unmapped labels: {', '.join(missing)}")
    for label, value in state_metric.items():
        if not (0.0 <= value <= 1.0):
            raise InvalidInputError(f"state_metric[{label}]: must be in [0, 1]")

    points: list[StatePoint] = []
    transitions: list[StateTransition] = []
    for p in trajectory.points:
        nxt = StatePoint(degradation=state_metric[p.label], level=p.level)
        if points and nxt == points[-1]:
            continue
        if points:
            prev = points[-1]
            d_deg = nxt.degradation - prev.degradation
            d_lvl = nxt.level - prev.level
            if d_deg > 0 or d_lvl < 0:
                kind = "challenge"
            elif d_deg < 0:
                kind = "recovery"
            else:
                kind = "remediation"
            transitions.append(StateTransition(kind=kind, start=prev, end=nxt))
        points.append(nxt)
    return StateSpacePath(points=tuple(points), transitions=tuple(transitions))
