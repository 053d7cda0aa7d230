"""Monte Carlo studies: repeated sampling, estimation and comparison with the oracle."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError
from .estimators import estimate_effects_iv, estimate_effects_si
from .oracle import EFFECTS, iv_mediation_estimands, population_theta_iv, si_probability_limits, true_effect_set
from .population import Population, ensure_valid
from .sampler import draw

ESTIMATORS = ("iv", "si")
THETA_FIELDS = ("alpha0", "alpha1", "beta0", "beta1", "pi0", "pi1", "tau0", "tau1")
LSEM_FIELDS = ("a0", "a1", "b0", "b1", "b2", "b3")
FAILURE_FLAG_SHARE = 0.10


def dataset_seed(seed: int, n: int, rep: int) -> int:
    """64-bit dataset seed from (seed, n, rep) via numpy's SeedSequence hash."""
    return int(np.random.SeedSequence([seed, n, rep]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class McConfig:
    population: Population
    n_grid: tuple[int, ...]
    reps: int
    seed: int = 0
    estimators: tuple[str, ...] = ("iv",)

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if not self.n_grid:
            raise DomainError("n_grid must be nonempty")
        if any(n < 1 for n in self.n_grid) or list(self.n_grid) != sorted(set(self.n_grid)):
            raise DomainError(f"n_grid must be strictly ascending positive counts, got {self.n_grid}")
        if self.reps < 2:
            raise DomainError(f"reps must be >= 2, got {self.reps}")
        if not self.estimators or any(e not in ESTIMATORS for e in self.estimators):
            raise DomainError(f"estimators must be a nonempty subset of {ESTIMATORS}")


@dataclass(frozen=True)
class McCell:
    """Summary of one (n, estimator, quantity) cell.

    ``estimand`` is the estimator's own probability limit (IV estimand for
    ``iv``, LSEM limit for ``si``); ``target`` is the true effect and is
    ``None`` for regression coefficients. Biases are reference minus mean,
    the sign convention of the oracle gaps.
    """

    n: int
    estimator: str
    quantity: str
    count: int
    failures: int
    mean: float | None
    sd: float | None
    se: float | None
    target: float | None
    estimand: float | None
    bias_to_target: float | None
    bias_to_estimand: float | None
    flagged: bool


@dataclass(frozen=True)
class McReport:
    reps: int
    seed: int
    cells: tuple[McCell, ...] = field(default_factory=tuple)

    def cell(self, n: int, estimator: str, quantity: str) -> McCell:
        for c in self.cells:
            if (c.n, c.estimator, c.quantity) == (n, estimator, quantity):
                return c
        raise KeyError((n, estimator, quantity))

    def to_dict(self) -> dict:
        return {"reps": self.reps, "seed": self.seed, "cells": [asdict(c) for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(McCell.__dataclass_fields__)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for c in self.cells:
            row = []
            for name in names:
                v = getattr(c, name)
                if v is None:
                    row.append("")
                elif isinstance(v, float):
                    row.append(f"{v:.17g}")
                else:
                    row.append(str(v))
            writer.writerow(row)
        return buf.getvalue()


def _references(pop: Population, estimator: str) -> tuple[dict, dict]:
    """Target and probability-limit values for every reported quantity."""
    truth = true_effect_set(pop)
    target = {e: getattr(truth, e) for e in EFFECTS}
    if estimator == "iv":
        theta = population_theta_iv(pop, strict=False)
        iv = iv_mediation_estimands(theta, pop.p_z)
        plim = {e: iv.get(e) for e in EFFECTS}
        plim.update({k: getattr(theta, k) for k in THETA_FIELDS})
    else:
        try:
            plim = si_probability_limits(pop)
        except DegeneracyError:
            plim = {}
    return target, plim


def _estimate(ds, estimator: str) -> dict:
    if estimator == "iv":
        est = estimate_effects_iv(ds, strict=False)
        out = dict(est.effects)
        out.update({k: getattr(est.theta_hat, k) for k in THETA_FIELDS})
        return out
    est = estimate_effects_si(ds)
    out = dict(est.effects)
    out.update({k: getattr(est, k) for k in LSEM_FIELDS})
    return out


def _summarise(values: list[float]):
    k = len(values)
    if k == 0:
        return None, None, None
    mean = math.fsum(values) / k
    if k < 2:
        return mean, None, None
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (k - 1))
    return mean, sd, sd / math.sqrt(k)


def run_mc(cfg: McConfig) -> McReport:
    """Run every (n, rep) dataset once and summarise each estimator on it.

    Dataset ``(n, rep)`` is drawn with :func:`dataset_seed`; all estimators
    see the same dataset. A quantity that fails or is undefined in a
    replicate counts as a failure for that cell only.
    """
    pop = ensure_valid(cfg.population)
    refs = {e: _references(pop, e) for e in cfg.estimators}
    names = {
        "iv": EFFECTS + THETA_FIELDS,
        "si": EFFECTS + LSEM_FIELDS,
    }
    cells: list[McCell] = []
    for n in cfg.n_grid:
        samples = {(e, q): [] for e in cfg.estimators for q in names[e]}
        for rep in range(cfg.reps):
            ds = draw(pop, n, dataset_seed(cfg.seed, n, rep))
            for e in cfg.estimators:
                try:
                    est = _estimate(ds, e)
                except DegeneracyError:
                    continue
                for q in names[e]:
                    v = est.get(q)
                    if v is not None and math.isfinite(v):
                        samples[e, q].append(v)
        for e in cfg.estimators:
            target, plim = refs[e]
            for q in names[e]:
                vals = samples[e, q]
                mean, sd, se = _summarise(vals)
                failures = cfg.reps - len(vals)
                t = target.get(q)
                p = plim.get(q)
                cells.append(McCell(
                    n=n, estimator=e, quantity=q, count=len(vals), failures=failures,
                    mean=mean, sd=sd, se=se, target=t, estimand=p,
                    bias_to_target=None if mean is None or t is None else t - mean,
                    bias_to_estimand=None if mean is None or p is None else p - mean,
                    flagged=failures > FAILURE_FLAG_SHARE * cfg.reps,
                ))
    return McReport(reps=cfg.reps, seed=cfg.seed, cells=tuple(cells))
