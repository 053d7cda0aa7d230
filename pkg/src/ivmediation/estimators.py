"""Finite-sample estimators of natural direct and indirect effects.

Two routes:

* ``iv``: per treatment arm, a just-identified IV regression of Y on M with
  Z as instrument, solved in closed form from the cell means (the Wald
  ratio), plus the mediator regression of M on Z; effects are assembled by
  :func:`ivmediation.oracle.iv_mediation_estimands` with the sample share of
  Z = 1.
* ``si``: ordinary least squares on the interacted linear model
  ``M ~ 1 + D`` and ``Y ~ 1 + D + M + D:M``, valid under sequential
  ignorability.

Percentile bootstrap intervals are available for both.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllReplicatesFailed, DegeneracyError, EmptyCell, SingularDesign, WeakInstrument
from .oracle import EFFECTS, ThetaIV, iv_mediation_estimands
from .sampler import Dataset

WEAK_THRESHOLD = 1e-8


@dataclass(frozen=True)
class EstimateSet:
    theta_hat: ThetaIV
    effects: dict
    e_z_hat: float
    cell_counts: dict
    first_stage: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.to_dict(),
            "effects": dict(self.effects),
            "e_z_hat": self.e_z_hat,
            "diagnostics": {
                "cell_counts": dict(self.cell_counts),
                "first_stage": list(self.first_stage),
            },
        }


@dataclass(frozen=True)
class LsemEstimate:
    a0: float
    a1: float
    b0: float
    b1: float
    b2: float
    b3: float
    effects: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _cell_stats(ds: Dataset):
    counts, mbar, ybar = {}, {}, {}
    for d in (0, 1):
        for z in (0, 1):
            mask = (ds.d == d) & (ds.z == z)
            k = int(mask.sum())
            counts[d, z] = k
            if k:
                mbar[d, z] = float(ds.m[mask].mean())
                ybar[d, z] = float(ds.y[mask].mean())
    return counts, mbar, ybar


def _theta_from_cells(counts, mbar, ybar, strict: bool, weak_threshold: float):
    coef = {}
    first = {}
    for d in (0, 1):
        for z in (0, 1):
            if counts[d, z] == 0:
                raise EmptyCell(d, z)
        n0, n1 = counts[d, 0], counts[d, 1]
        fs = mbar[d, 1] - mbar[d, 0]
        first[d] = fs
        coef[d, "m1"] = fs
        coef[d, "m0"] = mbar[d, 0]
        if abs(fs) < weak_threshold:
            if strict:
                raise WeakInstrument(d, fs)
            coef[d, "y1"] = coef[d, "y0"] = None
            continue
        slope = (ybar[d, 1] - ybar[d, 0]) / fs
        arm_y = (n0 * ybar[d, 0] + n1 * ybar[d, 1]) / (n0 + n1)
        arm_m = (n0 * mbar[d, 0] + n1 * mbar[d, 1]) / (n0 + n1)
        coef[d, "y1"] = slope
        coef[d, "y0"] = arm_y - slope * arm_m
    theta = ThetaIV(
        alpha0=coef[1, "y0"], alpha1=coef[1, "y1"],
        beta0=coef[0, "y0"], beta1=coef[0, "y1"],
        pi0=coef[0, "m0"], pi1=coef[0, "m1"],
        tau0=coef[1, "m0"], tau1=coef[1, "m1"],
    )
    return theta, (first[0], first[1])


def estimate_theta_iv(
    ds: Dataset, strict: bool = True, weak_threshold: float = WEAK_THRESHOLD
) -> ThetaIV:
    """Per-arm IV coefficients from cell means.

    Raises :class:`EmptyCell` if some (D, Z) cell is empty. A first-stage
    difference below ``weak_threshold`` raises :class:`WeakInstrument` when
    ``strict``, otherwise leaves that arm's outcome coefficients as ``None``.
    """
    counts, mbar, ybar = _cell_stats(ds)
    return _theta_from_cells(counts, mbar, ybar, strict, weak_threshold)[0]


def estimate_effects_iv(
    ds: Dataset, strict: bool = True, weak_threshold: float = WEAK_THRESHOLD
) -> EstimateSet:
    counts, mbar, ybar = _cell_stats(ds)
    theta, first = _theta_from_cells(counts, mbar, ybar, strict, weak_threshold)
    e_z = float(ds.z.mean())
    est = iv_mediation_estimands(theta, e_z)
    return EstimateSet(
        theta_hat=theta,
        effects={e: est.get(e) for e in EFFECTS},
        e_z_hat=e_z,
        cell_counts={f"d{d}z{z}": counts[d, z] for d in (0, 1) for z in (0, 1)},
        first_stage=first,
    )


def _lstsq(X: np.ndarray, y: np.ndarray, what: str) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesign(f"{what}: design matrix has rank {rank} < {X.shape[1]}")
    return coef


def estimate_effects_si(ds: Dataset) -> LsemEstimate:
    """OLS fits of the interacted linear mediation model."""
    for d in (0, 1):
        arm = ds.d == d
        if not arm.any():
            raise SingularDesign(f"no observations with D={d}")
        if ds.m[arm].min() == ds.m[arm].max():
            raise SingularDesign(f"mediator constant within arm D={d}")
    d = ds.d.astype(float)
    m = ds.m.astype(float)
    ones = np.ones(ds.n)
    a0, a1 = _lstsq(np.column_stack([ones, d]), m, "mediator equation")
    b0, b1, b2, b3 = _lstsq(np.column_stack([ones, d, m, d * m]), ds.y, "outcome equation")
    a0, a1, b0, b1, b2, b3 = map(float, (a0, a1, b0, b1, b2, b3))
    effects = {
        "nie0": b2 * a1,
        "nie1": (b2 + b3) * a1,
        "nde0": b1 + b3 * a0,
        "nde1": b1 + b3 * (a0 + a1),
    }
    return LsemEstimate(a0, a1, b0, b1, b2, b3, effects)


def point_effects(ds: Dataset, estimator: str, strict: bool = True) -> dict:
    """Effect dict for ``estimator`` in ``{"iv", "si"}``."""
    if estimator == "iv":
        return estimate_effects_iv(ds, strict=strict).effects
    if estimator == "si":
        return estimate_effects_si(ds).effects
    raise ValueError(f"unknown estimator {estimator!r}")


@dataclass(frozen=True)
class BootstrapResult:
    estimator: str
    reps: int
    seed: int
    failures: int
    intervals: dict
    undefined: dict

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "reps": self.reps,
            "seed": self.seed,
            "failures": self.failures,
            "intervals": {k: (None if v is None else list(v)) for k, v in self.intervals.items()},
            "undefined": dict(self.undefined),
        }


def bootstrap(
    ds: Dataset, estimator: str = "iv", reps: int = 200, seed: int = 0, strict: bool = True
) -> BootstrapResult:
    """Nonparametric row bootstrap with 2.5/97.5 percentile intervals.

    Replicate ``r`` resamples with a Philox stream keyed by
    ``SeedSequence([seed, r])``. Replicates that raise a degeneracy error
    count toward ``failures``; effects that are merely undefined in a
    replicate (non-strict IV) count toward ``undefined[effect]``.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    values = {e: [] for e in EFFECTS}
    undefined = {e: 0 for e in EFFECTS}
    failures = 0
    last: Exception | None = None
    for r in range(reps):
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, r])))
        idx = gen.integers(0, ds.n, size=ds.n)
        try:
            eff = point_effects(ds.take(idx), estimator, strict=strict)
        except DegeneracyError as exc:
            failures += 1
            last = exc
            continue
        for e in EFFECTS:
            v = eff.get(e)
            if v is None or not math.isfinite(v):
                undefined[e] += 1
            else:
                values[e].append(v)
    if failures == reps:
        raise AllReplicatesFailed(reps, last)
    intervals = {
        e: (None if not v else tuple(float(q) for q in np.percentile(v, [2.5, 97.5])))
        for e, v in values.items()
    }
    return BootstrapResult(estimator, reps, seed, failures, intervals, undefined)
