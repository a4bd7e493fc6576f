"""Two-phase operator exchanges for inertia and droop reserve provision.

Phase 1 estimates the maximum contribution an aggregated distribution
grid can offer (maximum inertia constant, droop feasibility envelope).
Phase 2 selects a target and distributes it to the individual units.
Distribution uses proportional rules (headroom for inertia, rating for
droop) behind a small interface so a power-flow based rule can be
plugged in later. Regulatory reserve checks live here as well.
"""

import math
from dataclasses import dataclass

from .errors import GridResError, InvalidInputError
from .frequency import DroopCurve, evaluate_droop

FCR_SINGLE_UNIT_CAP = 0.05  # max share of total containment reserve per unit


class InfeasibleHeadroomError(GridResError):
    """Offered maximum power is below the steady-state exchange."""


class InfeasibleAssignmentError(GridResError):
    """Aggregate target exceeds what the unit fleet can absorb."""


class DistributionError(GridResError):
    """A per-unit split violates a unit rating at some frequency."""


class FeasibilityViolationError(GridResError):
    """A candidate droop curve leaves the feasible envelope."""

    def __init__(self, offending_frequencies: list[float]):
        self.offending_frequencies = list(offending_frequencies)
        freqs = ", ".join(f"{f:g}" for f in self.offending_frequencies)
        super().__init__(f"droop curve infeasible at frequencies: {freqs}")


@dataclass(frozen=True)
class DerUnit:
    """A distributed resource with its operating point and headroom."""

    id: str
    p_rating: float               # pu
    p_available: float            # pu, current operating point
    bus: str = ""
    in_reference_incident: bool = False

    def __post_init__(self):
        violations = check_der_unit(self.id, self.p_rating, self.p_available)
        if violations:
            raise InvalidInputError("; ".join(violations))

    @property
    def headroom(self) -> float:
        return self.p_rating - self.p_available


def check_der_unit(unit_id, p_rating, p_available, prefix="unit"):
    out = []
    tag = f"{prefix}[{unit_id}]"
    if not (math.isfinite(p_rating) and p_rating >= 0):
        out.append(f"{tag}.p_rating: must be finite and >= 0")
    if not (math.isfinite(p_available) and 0 <= p_available):
        out.append(f"{tag}.p_available: must be finite and >= 0")
    elif math.isfinite(p_rating) and p_available > p_rating:
        out.append(f"{tag}.p_available: must be <= p_rating")
    return out


@dataclass(frozen=True)
class InertiaPhase1:
    """First exchange: expected worst ROCOF out, offered maximum back."""

    rocof_max_hz_per_s: float
    h_ag_max_s: float
    p0_ss_pu: float
    p0_irmax_pu: float

    def __post_init__(self):
        if self.p0_irmax_pu < self.p0_ss_pu:
            raise InvalidInputError("p0_irmax_pu: must be >= p0_ss_pu")
        if self.h_ag_max_s < 0:
            raise InvalidInputError("h_ag_max_s: must be >= 0")

    def to_dict(self) -> dict:
        return {"rocof_max_hz_per_s": self.rocof_max_hz_per_s,
                "h_ag_max_s": self.h_ag_max_s, "p0_ss_pu": self.p0_ss_pu,
                "p0_irmax_pu": self.p0_irmax_pu}


@dataclass(frozen=True)
class InertiaAssignment:
    """Selected aggregate inertia constant and its per-unit split."""

    h_ag_tso_s: float
    per_unit_h_s: dict[str, float]

    def to_dict(self) -> dict:
        return {"h_ag_tso_s": self.h_ag_tso_s,
                "per_unit_h_s": dict(sorted(self.per_unit_h_s.items()))}


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequency sampling grid for envelope construction and checks."""

    f_min: float
    f_max: float
    f_step: float
    f_n: float = 50.0

    def __post_init__(self):
        violations = check_frequency_grid(self.f_min, self.f_max, self.f_step, self.f_n)
        if violations:
            raise InvalidInputError("; ".join(violations))

    def frequencies(self) -> list[float]:
        """Rows from f_min in steps of f_step until f_max is reached or passed."""
        rows = [self.f_min]
        k = 0
        while rows[-1] < self.f_max - 1e-12:
            k += 1
            rows.append(self.f_min + k * self.f_step)
        return rows


def check_frequency_grid(f_min, f_max, f_step, f_n, prefix="grid"):
    out = []
    if not (math.isfinite(f_step) and f_step > 0):
        out.append(f"{prefix}.f_step: must be > 0")
    if not (math.isfinite(f_min) and math.isfinite(f_max) and f_min < f_max):
        out.append(f"{prefix}.f_min: must be < f_max")
    if not (math.isfinite(f_n) and f_n > 0):
        out.append(f"{prefix}.f_n: must be > 0")
    return out


@dataclass(frozen=True)
class DroopEnvelope:
    """Aggregated feasible area for droop curves over a frequency grid.

    corners holds the named points A..F as (frequency, power) pairs:
    A/B are the min/max power at f_max, C/D at f_n, E/F at f_min.
    """

    grid: FrequencyGrid
    frequencies: tuple[float, ...]
    p_agg_min: tuple[float, ...]
    p_agg_max: tuple[float, ...]
    corners: dict[str, tuple[float, float]]

    def __post_init__(self):
        if not (len(self.frequencies) == len(self.p_agg_min) == len(self.p_agg_max)):
            raise InvalidInputError("envelope: row lengths must match")
        if not self.frequencies:
            raise InvalidInputError("envelope: frequency grid is empty")
        if any(lo > hi for lo, hi in zip(self.p_agg_min, self.p_agg_max)):
            raise InvalidInputError(
                "envelope: p_agg_min must not exceed p_agg_max at any frequency")

    def bounds_at(self, index: int) -> tuple[float, float]:
        return self.p_agg_min[index], self.p_agg_max[index]


@dataclass(frozen=True)
class RuleViolation:
    unit_id: str
    rule: str            # "CapExceeded" or "IncidentUnitIncluded"
    detail: str


@dataclass(frozen=True)
class ReserveRuleReport:
    """Outcome of the regulatory checks; empty iff compliant."""

    violations: tuple[RuleViolation, ...]

    @property
    def compliant(self) -> bool:
        return not self.violations


def compute_h_ag_max(p0_irmax_pu: float, p0_ss_pu: float, f_n: float,
                     rocof_max_hz_per_s: float) -> float:
    """Maximum inertia constant an aggregated grid can offer.

    H = (f_n / 2) * (P0_irmax - P0_ss) / ROCOF_max
    """
    if not (math.isfinite(rocof_max_hz_per_s) and rocof_max_hz_per_s > 0):
        raise InvalidInputError("rocof_max_hz_per_s: must be > 0")
    if not (math.isfinite(f_n) and f_n > 0):
        raise InvalidInputError("f_n: must be > 0")
    if p0_irmax_pu < p0_ss_pu:
        raise InfeasibleHeadroomError(
            "p0_irmax below p0_ss leaves no headroom for inertial response")
    return (f_n / 2.0) * (p0_irmax_pu - p0_ss_pu) / rocof_max_hz_per_s


def compute_p0_ir(h_ag_tso_s: float, rocof_max_hz_per_s: float, f_n: float,
                  p0_ss_pu: float) -> float:
    """Total interchange power when delivering the selected inertia.

    P0_ir = 2 * H * ROCOF_max / f_n + P0_ss; the algebraic inverse of
    compute_h_ag_max.
    """
    if not (math.isfinite(f_n) and f_n > 0):
        raise InvalidInputError("f_n: must be > 0")
    if not (math.isfinite(h_ag_tso_s) and h_ag_tso_s >= 0):
        raise InvalidInputError("h_ag_tso_s: must be >= 0")
    return 2.0 * h_ag_tso_s * rocof_max_hz_per_s / f_n + p0_ss_pu


def make_inertia_assignment(phase1: InertiaPhase1, h_ag_tso_s: float,
                            units: list[DerUnit], f_n: float) -> InertiaAssignment:
    """Validate the operator's selection against phase 1 and split it.

    The selected constant must be strictly below the offered maximum.
    """
    if not h_ag_tso_s < phase1.h_ag_max_s:
        raise InvalidInputError(
            f"h_ag_tso_s: must be strictly below the offered maximum "
            f"({h_ag_tso_s:g} >= {phase1.h_ag_max_s:g})")
    per_unit = distribute_inertia(h_ag_tso_s, units, phase1.rocof_max_hz_per_s, f_n)
    return InertiaAssignment(h_ag_tso_s=h_ag_tso_s, per_unit_h_s=per_unit)


def distribute_inertia(h_ag_tso_s: float, units: list[DerUnit],
                       rocof_max_hz_per_s: float, f_n: float) -> dict[str, float]:
    """Split an aggregate inertia target into per-unit constants.

    The aggregate inertial power 2*H_ag*(S_ag/f_n)*ROCOF is allocated
    proportionally to unit headroom, then converted back to a per-unit
    inertia constant against each unit's rating. Units with no headroom
    receive zero.
    """
    if not (math.isfinite(rocof_max_hz_per_s) and rocof_max_hz_per_s > 0):
        raise InvalidInputError("rocof_max_hz_per_s: must be > 0")
    if not (math.isfinite(f_n) and f_n > 0):
        raise InvalidInputError("f_n: must be > 0")
    if not (math.isfinite(h_ag_tso_s) and h_ag_tso_s >= 0):
        raise InvalidInputError("h_ag_tso_s: must be >= 0")
    s_ag = sum(u.p_rating for u in units)
    required_power = 2.0 * h_ag_tso_s * (s_ag / f_n) * rocof_max_hz_per_s
    total_headroom = sum(u.headroom for u in units)
    if required_power > total_headroom + 1e-12:
        raise InfeasibleAssignmentError(
            f"aggregate inertial power {required_power:g} pu exceeds total "
            f"headroom {total_headroom:g} pu")
    per_unit: dict[str, float] = {}
    for u in units:
        if total_headroom <= 0 or u.headroom <= 0 or u.p_rating <= 0:
            per_unit[u.id] = 0.0
            continue
        power_i = required_power * (u.headroom / total_headroom)
        per_unit[u.id] = power_i * f_n / (2.0 * u.p_rating * rocof_max_hz_per_s)
    return per_unit


def compute_droop_envelope(units: list[DerUnit], grid: FrequencyGrid) -> DroopEnvelope:
    """Aggregate feasible power band per grid frequency.

    Capability sums: the minimum is zero output from every unit, the
    maximum is every unit at full rating, at each frequency row.
    """
    freqs = grid.frequencies()
    if not freqs:
        raise InvalidInputError("grid: produced an empty frequency grid")
    p_max_total = sum(u.p_rating for u in units)
    p_min = tuple(0.0 for _ in freqs)
    p_max = tuple(p_max_total for _ in freqs)

    def nearest(target):
        return min(range(len(freqs)), key=lambda i: (abs(freqs[i] - target), i))

    i_fmax, i_fn, i_fmin = nearest(grid.f_max), nearest(grid.f_n), nearest(grid.f_min)
    corners = {
        "A": (freqs[i_fmax], p_min[i_fmax]), "B": (freqs[i_fmax], p_max[i_fmax]),
        "C": (freqs[i_fn], p_min[i_fn]), "D": (freqs[i_fn], p_max[i_fn]),
        "E": (freqs[i_fmin], p_min[i_fmin]), "F": (freqs[i_fmin], p_max[i_fmin]),
    }
    return DroopEnvelope(grid=grid, frequencies=tuple(freqs), p_agg_min=p_min,
                         p_agg_max=p_max, corners=corners)


def select_droop(envelope: DroopEnvelope, candidate: DroopCurve) -> DroopCurve:
    """Accept a candidate curve iff it stays inside the envelope everywhere.

    Returns the curve on acceptance; raises with the offending grid
    frequencies otherwise.
    """
    tol = 1e-12
    offending = []
    for i, f in enumerate(envelope.frequencies):
        p = evaluate_droop(candidate, f)
        lo, hi = envelope.bounds_at(i)
        if p < lo - tol or p > hi + tol:
            offending.append(f)
    if offending:
        raise FeasibilityViolationError(offending)
    return candidate


def distribute_droop(selected: DroopCurve, units: list[DerUnit],
                     grid: FrequencyGrid) -> dict[str, DroopCurve]:
    """Split an accepted aggregate curve into per-unit curves by rating.

    Each unit receives the selected curve with all powers scaled by its
    rating share, so the per-unit outputs re-aggregate to the selected
    curve at every frequency.
    """
    total_rating = sum(u.p_rating for u in units)
    if total_rating <= 0:
        peak = max(abs(selected.p_max), abs(selected.p_min), abs(selected.p_nominal))
        if peak > 0:
            raise DistributionError("no rated capacity to carry the selected curve")
        return {}
    per_unit: dict[str, DroopCurve] = {}
    for u in units:
        w = u.p_rating / total_rating
        unit_curve = DroopCurve(
            f_n=selected.f_n,
            dead_band_half_width=selected.dead_band_half_width,
            p_nominal=selected.p_nominal * w,
            p_max=selected.p_max * w,
            f_min=selected.f_min,
            p_min=selected.p_min * w,
            f_max=selected.f_max,
        )
        if unit_curve.p_max > u.p_rating + 1e-12:
            raise DistributionError(
                f"unit {u.id}: split peak {unit_curve.p_max:g} exceeds rating "
                f"{u.p_rating:g}")
        per_unit[u.id] = unit_curve
    return per_unit


def check_reserve_rules(fcr_shares_pu: dict[str, float], total_fcr_pu: float,
                        incident_unit_ids=()) -> ReserveRuleReport:
    """Regulatory diversity checks on a containment-reserve portfolio.

    Flags any unit contributing more than 5% of the total, and any
    contributing unit that was part of the reference incident.
    """
    if not (math.isfinite(total_fcr_pu) and total_fcr_pu > 0):
        raise InvalidInputError("total_fcr_pu: must be > 0")
    incident = set(incident_unit_ids)
    violations = []
    for unit_id in sorted(fcr_shares_pu):
        share = fcr_shares_pu[unit_id]
        frac = share / total_fcr_pu
        if frac > FCR_SINGLE_UNIT_CAP:
            violations.append(RuleViolation(
                unit_id=unit_id, rule="CapExceeded",
                detail=f"contributes {frac:.2%} of total reserve, cap is "
                       f"{FCR_SINGLE_UNIT_CAP:.0%}"))
        if share > 0 and unit_id in incident:
            violations.append(RuleViolation(
                unit_id=unit_id, rule="IncidentUnitIncluded",
                detail="unit is part of the reference incident and must be "
                       "excluded from the reserve"))
    return ReserveRuleReport(violations=tuple(violations))
