"""Seeded generation of observational datasets (D, Z, M, Y).

Randomness is organised in fixed-size blocks of rows. Block ``k`` of a draw
with seed ``s`` uses a Philox generator keyed by ``SeedSequence([s, k])``
and always produces, in order, ``BLOCK_ROWS`` uniforms for the stratum,
``BLOCK_ROWS`` for D, ``BLOCK_ROWS`` for Z and ``BLOCK_ROWS`` standard
normals for the outcome noise; a short final block is truncated. Row ``i``
is therefore a pure function of (population, seed, i), independent of ``n``
and of how blocks are scheduled.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScenarioError
from .population import Population, ensure_valid

BLOCK_ROWS = 1 << 16
CSV_HEADER = "d,z,m,y"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented observed data. ``seed`` is ``None`` for loaded files."""

    d: np.ndarray
    z: np.ndarray
    m: np.ndarray
    y: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        n = len(self.d)
        if n == 0:
            raise DomainError("dataset must have at least one row")
        if not (len(self.z) == len(self.m) == len(self.y) == n):
            raise DomainError("dataset columns have different lengths")

    @property
    def n(self) -> int:
        return len(self.d)

    def rows(self):
        for i in range(self.n):
            yield int(self.d[i]), int(self.z[i]), int(self.m[i]), float(self.y[i])

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.d[idx], self.z[idx], self.m[idx], self.y[idx], seed=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for d, z, m, y in zip(self.d.tolist(), self.z.tolist(), self.m.tolist(), self.y.tolist()):
            buf.write(f"{d},{z},{m},{y:.17g}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        try:
            with open(path) as fh:
                header = fh.readline().strip()
                if header != CSV_HEADER:
                    raise ScenarioError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
                body = fh.read()
            if not body.strip():
                raise ScenarioError(f"{path}: no data rows")
            arr = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2, dtype=float)
        except OSError as exc:
            raise ScenarioError(f"cannot read {path}: {exc}") from exc
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
        if arr.shape[1] != 4:
            raise ScenarioError(f"{path}: expected 4 columns, got {arr.shape[1]}")
        binary = arr[:, :3]
        if not np.isin(binary, (0.0, 1.0)).all():
            bad = int(np.argwhere(~np.isin(binary, (0.0, 1.0)))[0, 0])
            raise ScenarioError(f"{path}: row {bad + 1}: d, z, m must be 0 or 1")
        if not np.isfinite(arr[:, 3]).all():
            raise ScenarioError(f"{path}: non-finite outcome")
        ints = binary.astype(np.int8)
        return cls(ints[:, 0], ints[:, 1], ints[:, 2], arr[:, 3].copy())


def _block(tables, seed: int, block: int, rows: int):
    m_tab, y_tab, sd, cum, p_d, p_z = tables
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    # always consume a full block so row values do not depend on n
    u_s = gen.random(BLOCK_ROWS)[:rows]
    u_d = gen.random(BLOCK_ROWS)[:rows]
    u_z = gen.random(BLOCK_ROWS)[:rows]
    eps = gen.standard_normal(BLOCK_ROWS)[:rows]
    s = np.minimum(np.searchsorted(cum, u_s, side="right"), len(cum) - 1)
    d = (u_d < p_d).astype(np.int8)
    z = (u_z < p_z).astype(np.int8)
    m = m_tab[s, d, z]
    y = y_tab[s, d, m] + sd[s] * eps
    return d, z, m, y


def draw(pop: Population, n: int, seed: int, workers: int = 1) -> Dataset:
    """Draw ``n`` i.i.d. rows from ``pop``.

    ``workers > 1`` generates blocks on a thread pool; the result is
    identical to the serial draw.
    """
    ensure_valid(pop)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if seed < 0:
        raise DomainError(f"seed must be >= 0, got {seed}")
    w = np.array(pop.weights, dtype=float)
    cum = np.cumsum(w) / w.sum()
    tables = (
        np.array([s.response.m for s in pop.strata], dtype=np.int8),
        np.array([s.outcomes.y for s in pop.strata], dtype=float),
        np.array([s.noise_sd for s in pop.strata], dtype=float),
        cum,
        pop.p_d,
        pop.p_z,
    )
    sizes = [min(BLOCK_ROWS, n - start) for start in range(0, n, BLOCK_ROWS)]
    jobs = [(tables, seed, k, rows) for k, rows in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _block(*a), jobs))
    else:
        parts = [_block(*a) for a in jobs]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    return Dataset(*cols, seed=seed)
