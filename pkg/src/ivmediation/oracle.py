"""Exact population quantities by enumeration over strata and instrument values.

Everything here is computed from the population law directly: the true
natural direct/indirect effects, the probability limit of the per-arm IV
coefficients, the mediation effects those coefficients imply, the
monotonicity diagnostics, and the gap between target and IV estimand.

Coefficient convention: ``(beta, pi)`` belong to the untreated arm (outcome
and mediator equations), ``(alpha, tau)`` to the treated arm.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DegeneracyError, SingularDesign, WeakInstrument
from .population import Population, ensure_valid

RELEVANCE_TOL = 1e-12
CONTRAST_TOL = 1e-12
CHECK_TOL = 1e-10

EFFECTS = ("nie0", "nie1", "nde0", "nde1")


@dataclass(frozen=True)
class EffectSet:
    ate: float
    nie0: float
    nie1: float
    nde0: float
    nde1: float
    cde0: float
    cde1: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThetaIV:
    """Per-arm linear IV coefficients.

    ``alpha*`` / ``beta*`` are ``None`` when the instrument has no first
    stage in the corresponding arm (the Wald ratio is undefined there).
    """

    alpha0: float | None
    alpha1: float | None
    beta0: float | None
    beta1: float | None
    pi0: float
    pi1: float
    tau0: float
    tau1: float

    def to_dict(self) -> dict:
        return asdict(self)

    def arm_defined(self, d: int) -> bool:
        return (self.alpha1 if d else self.beta1) is not None


@dataclass(frozen=True)
class IVEstimands:
    nie0_iv: float | None
    nie1_iv: float | None
    nde0_iv: float | None
    nde1_iv: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def get(self, effect: str) -> float | None:
        return getattr(self, f"{effect}_iv")


@dataclass(frozen=True)
class AssumptionReport:
    d_monotone_given_z: tuple[bool, bool]
    z_monotone_given_d: tuple[bool, bool]
    relevance: tuple[float, float]
    q1: float
    q2: float
    p1z: tuple[float, float]
    constant_effect: bool

    @property
    def d_monotone(self) -> bool:
        return all(self.d_monotone_given_z)

    @property
    def z_monotone(self) -> bool:
        return all(self.z_monotone_given_d)

    def to_dict(self) -> dict:
        return {
            "d_monotone_given_z": list(self.d_monotone_given_z),
            "z_monotone_given_d": list(self.z_monotone_given_d),
            "relevance": list(self.relevance),
            "q1": self.q1,
            "q2": self.q2,
            "p1z": list(self.p1z),
            "constant_effect": self.constant_effect,
        }


@dataclass(frozen=True)
class ComplierMeans:
    """Mean mediator effects within instrument-response groups.

    ``d0_up`` is E[Y(0,1) - Y(0,0) | M(0,1) > M(0,0)], ``d0_down`` the same
    for M(0,1) < M(0,0); ``d1_*`` use the treated arm. ``None`` when the
    conditioning group is empty.
    """

    d0_up: float | None
    d0_down: float | None
    d1_up: float | None
    d1_down: float | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GapReport:
    target: EffectSet
    iv: IVEstimands
    gaps: dict
    complier_means: ComplierMeans
    nie0_by_complier_weights: float | None
    nie0_iv_by_complier_weights: float | None
    cross_check_ok: bool | None

    def to_dict(self) -> dict:
        return {
            "target": self.target.to_dict(),
            "iv": self.iv.to_dict(),
            "gaps": dict(self.gaps),
            "complier_means": self.complier_means.to_dict(),
            "nie0_by_complier_weights": self.nie0_by_complier_weights,
            "nie0_iv_by_complier_weights": self.nie0_iv_by_complier_weights,
            "cross_check_ok": self.cross_check_ok,
        }


def _fsum(terms) -> float:
    return math.fsum(terms)


def true_effect_set(pop: Population) -> EffectSet:
    ensure_valid(pop)
    ate, nie0, nie1, nde0, nde1 = [], [], [], [], []
    for s in pop.strata:
        y, m = s.outcomes.y, s.response.m
        for z in (0, 1):
            w = s.weight * pop.pr_z(z)
            m0, m1 = m[0][z], m[1][z]
            ate.append(w * (y[1][m1] - y[0][m0]))
            nie0.append(w * (y[0][m1] - y[0][m0]))
            nie1.append(w * (y[1][m1] - y[1][m0]))
            nde0.append(w * (y[1][m0] - y[0][m0]))
            nde1.append(w * (y[1][m1] - y[0][m1]))
    cde = [_fsum(s.weight * (s.outcomes.y[1][mm] - s.outcomes.y[0][mm]) for s in pop.strata)
           for mm in (0, 1)]
    return EffectSet(
        ate=_fsum(ate), nie0=_fsum(nie0), nie1=_fsum(nie1),
        nde0=_fsum(nde0), nde1=_fsum(nde1), cde0=cde[0], cde1=cde[1],
    )


def mediator_cell_mean(pop: Population, d: int, z: int) -> float:
    """E[M(d, z)] over strata."""
    return _fsum(s.weight * s.response.m[d][z] for s in pop.strata)


def population_theta_iv(pop: Population, strict: bool = True) -> ThetaIV:
    """Probability limit of the per-arm IV coefficients.

    With ``strict`` (default) a missing first stage in either arm raises
    :class:`WeakInstrument`. Otherwise the affected arm's outcome-equation
    coefficients are returned as ``None``.
    """
    ensure_valid(pop)
    pz = pop.p_z
    coef = {}
    for d in (0, 1):
        em_d0 = mediator_cell_mean(pop, d, 0)
        em_d1 = mediator_cell_mean(pop, d, 1)
        first_stage = em_d1 - em_d0
        em_d = (1 - pz) * em_d0 + pz * em_d1
        ey_d = _fsum(
            s.weight * pop.pr_z(z) * s.outcomes.y[d][s.response.m[d][z]]
            for s in pop.strata for z in (0, 1)
        )
        reduced_form = _fsum(
            s.weight * (s.outcomes.y[d][s.response.m[d][1]] - s.outcomes.y[d][s.response.m[d][0]])
            for s in pop.strata
        )
        coef[d, "m1"] = first_stage
        coef[d, "m0"] = em_d - first_stage * pz
        if abs(first_stage) < RELEVANCE_TOL:
            if strict:
                raise WeakInstrument(d, first_stage)
            coef[d, "y1"] = coef[d, "y0"] = None
        else:
            slope = reduced_form / first_stage
            coef[d, "y1"] = slope
            coef[d, "y0"] = ey_d - slope * em_d
    return ThetaIV(
        alpha0=coef[1, "y0"], alpha1=coef[1, "y1"],
        beta0=coef[0, "y0"], beta1=coef[0, "y1"],
        pi0=coef[0, "m0"], pi1=coef[0, "m1"],
        tau0=coef[1, "m0"], tau1=coef[1, "m1"],
    )


def iv_mediation_estimands(theta: ThetaIV, e_z: float) -> IVEstimands:
    """Mediation effects implied by the linear IV coefficients.

    E[M0] = pi0 + pi1 * E[Z] and E[M1] = tau0 + tau1 * E[Z]. Components that
    need an undefined arm come back as ``None``.
    """
    em0 = theta.pi0 + theta.pi1 * e_z
    em1 = theta.tau0 + theta.tau1 * e_z
    shift = em1 - em0
    b0, b1, a0, a1 = theta.beta0, theta.beta1, theta.alpha0, theta.alpha1
    nie0 = None if b1 is None else b1 * shift
    nie1 = None if a1 is None else a1 * shift
    if a1 is None or b1 is None:
        nde0 = nde1 = None
    else:
        nde0 = (a0 - b0) + (a1 - b1) * em0
        nde1 = (a0 - b0) + (a1 - b1) * em1
    return IVEstimands(nie0_iv=nie0, nie1_iv=nie1, nde0_iv=nde0, nde1_iv=nde1)


def _contrasts(y) -> tuple[float, float, float]:
    base = y[0][0]
    return (y[0][1] - base, y[1][0] - base, y[1][1] - base)


def assumption_report(pop: Population) -> AssumptionReport:
    ensure_valid(pop)
    live = [s for s in pop.strata if s.weight > 0]
    d_mono = tuple(all(s.response.m[1][z] >= s.response.m[0][z] for s in live) for z in (0, 1))
    z_mono = tuple(all(s.response.m[d][1] >= s.response.m[d][0] for s in live) for d in (0, 1))
    relevance = tuple(mediator_cell_mean(pop, d, 1) - mediator_cell_mean(pop, d, 0) for d in (0, 1))
    q1 = _fsum(s.weight for s in pop.strata if s.response.m[0][1] > s.response.m[0][0])
    q2 = _fsum(s.weight for s in pop.strata if s.response.m[0][1] < s.response.m[0][0])
    p1z = tuple(
        _fsum(s.weight for s in pop.strata if s.response.m[1][z] > s.response.m[0][z])
        for z in (0, 1)
    )
    ref = _contrasts(live[0].outcomes.y)
    constant = all(
        all(abs(a - b) <= CONTRAST_TOL for a, b in zip(_contrasts(s.outcomes.y), ref))
        for s in live
    )
    return AssumptionReport(
        d_monotone_given_z=d_mono, z_monotone_given_d=z_mono, relevance=relevance,
        q1=q1, q2=q2, p1z=p1z, constant_effect=constant,
    )


def _conditional_mediator_effect(pop: Population, arm: int, select) -> float | None:
    """E[Y(arm,1) - Y(arm,0) | select(stratum)], or None for an empty group."""
    mass = _fsum(s.weight for s in pop.strata if select(s))
    if mass <= 0:
        return None
    num = _fsum(
        s.weight * (s.outcomes.y[arm][1] - s.outcomes.y[arm][0])
        for s in pop.strata if select(s)
    )
    return num / mass


def complier_means(pop: Population) -> ComplierMeans:
    def up(d):
        return lambda s: s.response.m[d][1] > s.response.m[d][0]

    def down(d):
        return lambda s: s.response.m[d][1] < s.response.m[d][0]

    return ComplierMeans(
        d0_up=_conditional_mediator_effect(pop, 0, up(0)),
        d0_down=_conditional_mediator_effect(pop, 0, down(0)),
        d1_up=_conditional_mediator_effect(pop, 1, up(1)),
        d1_down=_conditional_mediator_effect(pop, 1, down(1)),
    )


def nie0_by_complier_weights(pop: Population) -> float:
    """Untreated-arm indirect effect as a signed sum over treatment-response groups.

    For each instrument value, units moved up by treatment contribute their
    mediator effect positively and units moved down contribute negatively.
    """
    terms = []
    for z in (0, 1):
        pz = pop.pr_z(z)
        for sign, sel in ((1.0, lambda s, z=z: s.response.m[1][z] > s.response.m[0][z]),
                          (-1.0, lambda s, z=z: s.response.m[1][z] < s.response.m[0][z])):
            share = _fsum(s.weight for s in pop.strata if sel(s))
            mean = _conditional_mediator_effect(pop, 0, sel)
            if mean is not None:
                terms.append(sign * mean * share * pz)
    return _fsum(terms)


def nie0_iv_by_complier_weights(pop: Population) -> float | None:
    """Instrument-complier mean effect times the treatment-complier share.

    Valid only when treatment and instrument monotonicity both hold.
    """
    mean = _conditional_mediator_effect(
        pop, 0, lambda s: s.response.m[0][1] > s.response.m[0][0])
    if mean is None:
        return None
    weight = _fsum(
        s.weight * pop.pr_z(z)
        for z in (0, 1) for s in pop.strata if s.response.m[1][z] > s.response.m[0][z]
    )
    return mean * weight


def gap_report(pop: Population) -> GapReport:
    """Compare true effects with the IV estimands.

    IV components that are not identified (no first stage in the relevant
    arm) are ``None`` along with their gaps. Raises :class:`WeakInstrument`
    only when neither arm has a first stage.
    """
    target = true_effect_set(pop)
    theta = population_theta_iv(pop, strict=False)
    if not theta.arm_defined(0) and not theta.arm_defined(1):
        raise WeakInstrument(0, theta.pi1)
    iv = iv_mediation_estimands(theta, pop.p_z)
    gaps = {}
    for e in EFFECTS:
        v = iv.get(e)
        gaps[e] = None if v is None else getattr(target, e) - v
    report = assumption_report(pop)
    eq_nie0 = eq_nie0_iv = check = None
    if report.d_monotone and report.z_monotone:
        eq_nie0 = nie0_by_complier_weights(pop)
        eq_nie0_iv = nie0_iv_by_complier_weights(pop)
        check = abs(eq_nie0 - target.nie0) <= CHECK_TOL
        if eq_nie0_iv is not None and iv.nie0_iv is not None:
            check = check and abs(eq_nie0_iv - iv.nie0_iv) <= CHECK_TOL
    return GapReport(
        target=target, iv=iv, gaps=gaps, complier_means=complier_means(pop),
        nie0_by_complier_weights=eq_nie0, nie0_iv_by_complier_weights=eq_nie0_iv,
        cross_check_ok=check,
    )


def si_probability_limits(pop: Population) -> dict:
    """Probability limits of the interacted LSEM fits and implied effects.

    The outcome regression on (1, D, M, DM) is saturated, so its limit is the
    table of cell means E[Y | D, M]; the mediator regression's limit is
    E[M | D]. Raises :class:`SingularDesign` when some (D, M) cell has zero
    probability.
    """
    ensure_valid(pop)
    em = {}
    ey = {}
    for d in (0, 1):
        em[d] = _fsum(s.weight * pop.pr_z(z) * s.response.m[d][z]
                      for s in pop.strata for z in (0, 1))
        for mm in (0, 1):
            rows = [(s.weight * pop.pr_z(z), s.outcomes.y[d][mm])
                    for s in pop.strata for z in (0, 1) if s.response.m[d][z] == mm]
            mass = _fsum(w for w, _ in rows)
            if mass <= 0:
                raise SingularDesign(f"Pr(M={mm} | D={d}) = 0: outcome regression not identified")
            ey[d, mm] = _fsum(w * y for w, y in rows) / mass
    a0, a1 = em[0], em[1] - em[0]
    b0 = ey[0, 0]
    b1 = ey[1, 0] - ey[0, 0]
    b2 = ey[0, 1] - ey[0, 0]
    b3 = ey[1, 1] - ey[1, 0] - b2
    return {
        "a0": a0, "a1": a1, "b0": b0, "b1": b1, "b2": b2, "b3": b3,
        "nie0": b2 * a1, "nie1": (b2 + b3) * a1,
        "nde0": b1 + b3 * a0, "nde1": b1 + b3 * (a0 + a1),
    }


def full_report(pop: Population) -> tuple[dict, DegeneracyError | None]:
    """Everything the oracle knows about ``pop`` as one JSON-ready dict.

    Returns the report and the identification error, if any. On error the
    report still carries the true effects and assumption diagnostics.
    """
    out: dict = {
        "true_effects": true_effect_set(pop).to_dict(),
        "assumptions": assumption_report(pop).to_dict(),
    }
    err: DegeneracyError | None = None
    try:
        theta = population_theta_iv(pop, strict=True)
    except WeakInstrument as exc:
        err = exc
        theta = population_theta_iv(pop, strict=False)
        if not (theta.arm_defined(0) or theta.arm_defined(1)):
            return out, err
    out["theta_iv"] = theta.to_dict()
    out["iv_estimands"] = iv_mediation_estimands(theta, pop.p_z).to_dict()
    out["gap"] = gap_report(pop).to_dict()
    return out, err
