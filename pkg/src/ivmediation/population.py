"""Principal-strata populations with binary treatment, mediator and instrument.

A population is a finite mixture of strata. Each stratum fixes the full
mediator response table ``M(d, z)`` and the stratum-conditional mean outcomes
``Y(d, m)``. Treatment and instrument are drawn independently of each other
and of the stratum, so treatment exogeneity and instrument randomization hold
by construction. Outcomes carry no instrument index, which encodes the
exclusion restriction structurally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, InvalidPopulation

WEIGHT_TOL = 1e-12


def _table(values, name: str, cast) -> tuple[tuple, tuple]:
    try:
        rows = tuple(tuple(cast(v) for v in row) for row in values)
    except TypeError as exc:
        raise DomainError(f"{name} must be a 2x2 table") from exc
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise DomainError(f"{name} must be a 2x2 table, got {values!r}")
    return rows


@dataclass(frozen=True)
class MediatorResponse:
    """Potential mediators, indexed ``m[d][z]``."""

    m: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "m", _table(self.m, "mediator response", lambda v: v))

    def __getitem__(self, d: int) -> tuple[int, int]:
        return self.m[d]


@dataclass(frozen=True)
class OutcomeProfile:
    """Stratum mean potential outcomes, indexed ``y[d][m]``."""

    y: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "y", _table(self.y, "outcome profile", float))

    def __getitem__(self, d: int) -> tuple[float, float]:
        return self.y[d]


@dataclass(frozen=True)
class Stratum:
    weight: float
    response: MediatorResponse
    outcomes: OutcomeProfile
    noise_sd: float = 0.0

    def __post_init__(self):
        if not isinstance(self.response, MediatorResponse):
            object.__setattr__(self, "response", MediatorResponse(self.response))
        if not isinstance(self.outcomes, OutcomeProfile):
            object.__setattr__(self, "outcomes", OutcomeProfile(self.outcomes))
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "noise_sd", float(self.noise_sd))


@dataclass(frozen=True)
class Population:
    strata: tuple[Stratum, ...]
    p_z: float
    p_d: float

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        object.__setattr__(self, "p_z", float(self.p_z))
        object.__setattr__(self, "p_d", float(self.p_d))

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(s.weight for s in self.strata)

    def pr_z(self, z: int) -> float:
        return self.p_z if z else 1.0 - self.p_z

    def pr_d(self, d: int) -> float:
        return self.p_d if d else 1.0 - self.p_d

    def with_noise(self, noise_sd: float) -> "Population":
        """Copy with every stratum's noise scale replaced."""
        return Population(
            strata=[Stratum(s.weight, s.response, s.outcomes, noise_sd) for s in self.strata],
            p_z=self.p_z,
            p_d=self.p_d,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "Population":
        """Build from the scenario layout (``m`` is ``[d][z]``, ``y`` is ``[d][m]``).

        Only shape is checked here; call :func:`validate` for value checks.
        """
        return cls(
            strata=[
                Stratum(
                    weight=s["weight"],
                    response=MediatorResponse(s["m"]),
                    outcomes=OutcomeProfile(s["y"]),
                    noise_sd=s.get("noise_sd", 0.0),
                )
                for s in data["strata"]
            ],
            p_z=data["p_z"],
            p_d=data["p_d"],
        )

    def to_dict(self) -> dict:
        return {
            "p_z": self.p_z,
            "p_d": self.p_d,
            "strata": [
                {
                    "weight": s.weight,
                    "m": [list(r) for r in s.response.m],
                    "y": [list(r) for r in s.outcomes.y],
                    "noise_sd": s.noise_sd,
                }
                for s in self.strata
            ],
        }


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def __bool__(self) -> bool:
        return self.ok


def _is_prob(x: float) -> bool:
    return math.isfinite(x) and 0.0 <= x <= 1.0


def validate(pop: Population) -> ValidationReport:
    """Collect every invariant violation of ``pop``; never raises."""
    out: list[Violation] = []
    if not pop.strata:
        out.append(Violation("empty_strata", "population has no strata", "strata"))
    for i, s in enumerate(pop.strata):
        loc = f"strata[{i}]"
        if not _is_prob(s.weight):
            out.append(Violation("weight_range", f"weight {s.weight!r} not in [0, 1]", f"{loc}.weight"))
        if not (math.isfinite(s.noise_sd) and s.noise_sd >= 0.0):
            out.append(Violation("noise_sd", f"noise_sd {s.noise_sd!r} must be >= 0", f"{loc}.noise_sd"))
        for d in (0, 1):
            for z in (0, 1):
                v = s.response.m[d][z]
                if isinstance(v, bool) or v not in (0, 1):
                    out.append(Violation(
                        "mediator_value", f"M({d},{z}) = {v!r} is not 0 or 1", f"{loc}.m[{d}][{z}]"))
            for m in (0, 1):
                if not math.isfinite(s.outcomes.y[d][m]):
                    out.append(Violation(
                        "outcome_nonfinite", f"Y({d},{m}) is not finite", f"{loc}.y[{d}][{m}]"))
    total = math.fsum(pop.weights)
    if pop.strata and not abs(total - 1.0) <= WEIGHT_TOL:
        out.append(Violation("weights_sum", f"weights sum to {total!r}, not 1", "strata"))
    if not (math.isfinite(pop.p_z) and 0.0 < pop.p_z < 1.0):
        out.append(Violation("degenerate_instrument", f"p_z = {pop.p_z!r} not in (0, 1)", "p_z"))
    if not (math.isfinite(pop.p_d) and 0.0 < pop.p_d < 1.0):
        out.append(Violation("degenerate_treatment", f"p_d = {pop.p_d!r} not in (0, 1)", "p_d"))
    return ValidationReport(tuple(out))


def ensure_valid(pop: Population) -> Population:
    report = validate(pop)
    if not report.ok:
        raise InvalidPopulation(report.violations)
    return pop


def build_paper_counterexample(alpha: float = 1.0) -> Population:
    """Two strata whose instrument-complier and -defier effects cancel.

    Two thirds of units switch the mediator on when the instrument is
    switched on in the untreated arm, one third switch it off; their effects
    of the mediator on the untreated outcome are ``alpha`` and ``2 * alpha``.
    Treatment monotonicity holds, instrument monotonicity fails at ``d = 0``.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be > 0, got {alpha!r}")
    compliers = Stratum(
        weight=2 / 3,
        response=MediatorResponse(((0, 1), (1, 1))),
        outcomes=OutcomeProfile(((0.0, alpha), (0.0, 0.0))),
    )
    defiers = Stratum(
        weight=1 / 3,
        response=MediatorResponse(((1, 0), (1, 1))),
        outcomes=OutcomeProfile(((0.0, 2 * alpha), (0.0, 0.0))),
    )
    return Population(strata=(compliers, defiers), p_z=0.5, p_d=0.5)


def joint_cells(pop: Population):
    """Yield ``(prob, stratum, d, z)`` over the joint law of stratum, D and Z."""
    for s in pop.strata:
        for d in (0, 1):
            for z in (0, 1):
                yield s.weight * pop.pr_d(d) * pop.pr_z(z), s, d, z


def all_response_tables() -> list[MediatorResponse]:
    """All 16 binary response tables ``M(d, z)``."""
    out = []
    for bits in range(16):
        b = [(bits >> k) & 1 for k in range(4)]
        out.append(MediatorResponse(((b[0], b[1]), (b[2], b[3]))))
    return out


def is_doubly_monotone(r: MediatorResponse) -> bool:
    m = r.m
    return m[1][0] >= m[0][0] and m[1][1] >= m[0][1] and m[0][1] >= m[0][0] and m[1][1] >= m[1][0]
