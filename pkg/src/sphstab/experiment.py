"""Perturbation harness and certification experiments."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .cells import HypothesisError
from .polytopes import PolytopeSpec, generate, parse_kind
from .recovery import procrustes_align, recover
from .sphgeo import min_separation

log = logging.getLogger(__name__)

CSV_VERSION = 1
MODES = ("tangent-uniform", "tangent-gaussian")
MAX_TRIES = 100


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream (Philox) addressed by ``seed`` and a spawn key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _tangent_step(x: np.ndarray, eps: float, mode: str, rng: np.random.Generator) -> np.ndarray:
    d = x.size
    g = rng.normal(size=d)
    g -= (g @ x) * x
    norm = np.linalg.norm(g)
    if mode == "tangent-uniform":
        # Uniform in the tangent (d-1)-ball of radius eps.
        angle = eps * rng.uniform() ** (1.0 / (d - 1))
    else:
        angle = min(eps, 0.5 * eps * norm / math.sqrt(d - 1))
    y = math.cos(angle) * x + math.sin(angle) * (g / norm)
    return y / np.linalg.norm(y)


def perturb(polytope: PolytopeSpec, eps: float, seed=0, mode: str = "tangent-uniform",
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Move each vertex within its tangent space by an angle <= eps.

    Points whose move breaks the separation 2(phi - eps) through rounding are
    re-drawn (up to 100 times), after which the step is halved.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if mode not in MODES:
        raise ValueError(f"unknown perturbation mode {mode!r}; expected one of {MODES}")
    V = np.array(polytope.vertices, dtype=float)
    if eps == 0:
        return V
    rng = rng_for(seed) if rng is None else rng
    need = 2.0 * (polytope.phi - eps)
    X = V.copy()
    for i in range(len(V)):
        step = eps
        for attempt in range(2 * MAX_TRIES):
            if attempt and attempt % MAX_TRIES == 0:
                step /= 2.0
            y = _tangent_step(V[i], step, mode, rng)
            # Later points are checked against this one when they move.
            others = X[:i]
            if len(others) == 0 or np.arccos(np.clip(others @ y, -1, 1)).min() >= need:
                X[i] = y
                break
        else:
            raise RuntimeError(f"could not place point {i} with separation {need!r}")
    return X


def scramble(X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal image and row permutation (recovery must not rely on order)."""
    d = X.shape[1]
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    return (X @ Q.T)[rng.permutation(len(X))]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    dim: int | None = None
    eps: tuple[float, ...] = (1e-7, 1e-6, 1e-5)
    seeds: int = 50
    seed: int = 0
    mode: str = "tangent-uniform"
    out: str | None = None
    jobs: int = 1
    scramble: bool = True

    def __post_init__(self):
        kind, d = parse_kind(self.kind, self.dim)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if not self.eps or any(not e > 0 for e in self.eps):
            raise ValueError("eps values must be positive")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class ExperimentRow:
    kind: str
    d: int
    eps: float
    seed: int
    min_separation: float
    k: int
    max_deviation: float
    ratio: float
    paper_ceiling: float
    passed: bool
    procrustes_deviation: float
    cross_ratio: float
    exploratory: bool
    error: str = ""
    # Kept out of the CSV so identical configs give identical bytes.
    wall_time: float = field(default=0.0, compare=False)


def _run_one(config: ExperimentConfig, spec: PolytopeSpec, ei: int, s: int) -> ExperimentRow:
    t0 = time.perf_counter()
    row = _measure(config, spec, ei, s)
    row.wall_time = time.perf_counter() - t0
    return row


def _measure(config: ExperimentConfig, spec: PolytopeSpec, ei: int, s: int) -> ExperimentRow:
    eps = config.eps[ei]
    rng = rng_for(config.seed, ei, s)
    X = perturb(spec, eps, mode=config.mode, rng=rng)
    if config.scramble:
        X = scramble(X, rng)
    sep = min_separation(X)
    row = dict(kind=spec.label, d=spec.dim, eps=eps, seed=s, min_separation=sep, k=len(X),
               paper_ceiling=spec.c_P, exploratory=eps > spec.eps_P)
    try:
        res = recover(X, spec.kind, spec.dim, eps)
    except (HypothesisError, ValueError, ArithmeticError) as exc:
        return ExperimentRow(**row, max_deviation=math.nan, ratio=math.nan, passed=False,
                             procrustes_deviation=math.nan, cross_ratio=math.nan, error=str(exc))
    oracle = procrustes_align(X, spec.vertices)
    dev = res.max_deviation
    return ExperimentRow(**row, max_deviation=dev, ratio=dev / eps, passed=res.passed,
                         procrustes_deviation=oracle.max_deviation,
                         cross_ratio=dev / oracle.max_deviation if oracle.max_deviation > 0 else math.nan)


CSV_COLUMNS = tuple(f.name for f in fields(ExperimentRow) if f.name != "wall_time")


def _task(args):
    return _run_one(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ExperimentRow]
    summary: list[dict] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# sphstab experiment csv v{CSV_VERSION}\n")
        names = CSV_COLUMNS
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, n)) for n in names])
        for s in self.summary:
            w.writerow([_fmt(s.get(n, "")) for n in names])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "csv_version": CSV_VERSION,
            "config": asdict(self.config),
            "rows": [asdict(r) for r in self.rows],
            "summary": self.summary,
        }


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Perturb, recover and certify for every (eps, seed); rows in grid order."""
    spec = generate(config.kind, config.dim)
    tasks = [(config, spec, ei, s) for ei in range(len(config.eps)) for s in range(config.seeds)]
    if any(e > spec.eps_P for e in config.eps):
        log.warning("eps above eps_P = %g for %s: rows tagged exploratory", spec.eps_P, spec.label)
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_task, tasks, chunksize=4))
    else:
        rows = [_run_one(*t) for t in tasks]
    summary = []
    for e in config.eps:
        sel = [r for r in rows if r.eps == e]
        ratios = [r.ratio for r in sel if not math.isnan(r.ratio)]
        summary.append({
            "kind": spec.label, "d": spec.dim, "eps": e, "seed": "summary",
            "ratio": max(ratios) if ratios else math.nan,
            "max_deviation": max((r.max_deviation for r in sel), default=math.nan),
            "passed": all(r.passed for r in sel),
            "paper_ceiling": spec.c_P,
            "k": spec.f0,
        })
    return ExperimentResult(config, rows, summary)
