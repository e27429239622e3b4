"""Parameter-space exploration: Latin Hypercube Sampling and SCE search.

Two complementary samplers over a bounded box:

  - `lhs` stratifies every dimension into `count` equal-width strata and
    places exactly one point in each, with independent per-dimension
    sub-streams so one dimension's draws never perturb another's.
  - `sce_optimize` runs a shuffled-complex-evolution global search
    (complexes evolved by simplex reflection/contraction over rank-weighted
    sub-complexes, reshuffled between loops), maximizing the objective.

`sce_repeats` reruns the search with consecutive seeds and reports the
highest value found, the protocol used to cross-check whether random
sampling alone has found the best attainable score.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, FluxmapError
from .rng import substream

__all__ = [
    "ParameterSpace",
    "ParameterSet",
    "SceConfig",
    "SearchResult",
    "lhs",
    "lhs_matrix",
    "stratum_edges",
    "sce_optimize",
    "sce_repeats",
    "default_sce_config",
    "write_parameter_sets_csv",
    "read_parameter_sets_csv",
]

DEFAULT_MAX_EVALS = 50_000
DEFAULT_CONVERGENCE_TOL = 1e-4
DEFAULT_CONVERGENCE_WINDOW = 10

# Sub-stream tags so unrelated draws never share a counter path.
_TAG_LHS = 0
_TAG_SCE = 1


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered box: (name, lower, upper) per dimension."""

    dims: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        names = [d[0] for d in self.dims]
        if len(set(names)) != len(names):
            raise DataError("parameter names must be unique")
        for name, lo, hi in self.dims:
            if not lo < hi:
                raise DataError(f"bad range for {name}: [{lo}, {hi}]")

    @classmethod
    def from_ranges(cls, names: tuple[str, ...],
                    ranges: dict[str, tuple[float, float]]) -> "ParameterSpace":
        missing = sorted(set(names) - set(ranges))
        if missing:
            raise DataError(f"no range given for: {', '.join(missing)}")
        return cls(tuple((n, float(ranges[n][0]), float(ranges[n][1])) for n in names))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d[0] for d in self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d[1] for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d[2] for d in self.dims])

    def make_set(self, values) -> "ParameterSet":
        vec = np.asarray(values, dtype=float)
        if vec.shape != (self.ndim,):
            raise DataError(f"expected {self.ndim} values, got shape {vec.shape}")
        for (name, lo, hi), v in zip(self.dims, vec):
            if not lo <= v <= hi:
                raise DataError(f"{name}={v!r} outside [{lo}, {hi}]")
        return ParameterSet(values=tuple(float(v) for v in vec))


@dataclass(frozen=True)
class ParameterSet:
    """A point in a ParameterSpace, aligned with its dimension order."""

    values: tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    def as_mapping(self, space: ParameterSpace) -> dict[str, float]:
        return dict(zip(space.names, self.values))


@dataclass(frozen=True)
class SceConfig:
    """Search budget and shape; seed controls every random draw."""

    n_complexes: int
    points_per_complex: int
    max_evals: int
    convergence_tol: float
    convergence_window: int
    seed: int

    def __post_init__(self):
        if self.n_complexes < 2:
            raise DataError("n_complexes must be >= 2")
        if self.points_per_complex < 3:
            raise DataError("points_per_complex must be >= 3")
        if self.max_evals <= 0:
            raise DataError("max_evals must be > 0")
        if self.convergence_tol <= 0.0:
            raise DataError("convergence_tol must be > 0")
        if self.convergence_window < 1:
            raise DataError("convergence_window must be >= 1")


def default_sce_config(ndim: int, n_complexes: int, seed: int,
                       max_evals: int = DEFAULT_MAX_EVALS) -> SceConfig:
    """Recommended shape scaled to dimensionality: 2d+1 points per complex."""
    return SceConfig(
        n_complexes=n_complexes,
        points_per_complex=2 * ndim + 1,
        max_evals=max_evals,
        convergence_tol=DEFAULT_CONVERGENCE_TOL,
        convergence_window=DEFAULT_CONVERGENCE_WINDOW,
        seed=seed,
    )


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one search: best point, score, budget spent, progress."""

    best_params: ParameterSet
    best_value: float
    evals_used: int
    trace: tuple[float, ...]
    failures: int = 0

    def to_json(self, space: ParameterSpace | None = None) -> str:
        payload = {
            "best_params": (self.best_params.as_mapping(space) if space
                            else list(self.best_params.values)),
            "best_value": self.best_value,
            "evals_used": self.evals_used,
            "trace": list(self.trace),
            "failures": self.failures,
        }
        return json.dumps(payload, indent=2)


def stratum_edges(lower: float, upper: float, count: int) -> np.ndarray:
    """count+1 stratum boundaries over [lower, upper], last edge == upper."""
    edges = lower + (upper - lower) * (np.arange(count + 1) / count)
    edges[0] = lower
    edges[-1] = upper
    return edges


def lhs_matrix(space: ParameterSpace, count: int, seed: int) -> np.ndarray:
    """Latin hypercube draw as a (count, ndim) array.

    Each dimension independently permutes the strata and places one point
    uniformly inside each; points are clamped into their half-open stratum
    so membership survives floating-point rounding at the boundaries.
    """
    if count < 1:
        raise DataError(f"count must be >= 1, got {count}")
    out = np.empty((count, space.ndim))
    for j, (name, lo, hi) in enumerate(space.dims):
        rng = substream(seed, _TAG_LHS, j)
        perm = rng.permutation(count)
        pos = rng.uniform(size=count)
        edges = stratum_edges(lo, hi, count)
        left = edges[perm]
        right = edges[perm + 1]
        values = left + pos * (right - left)
        np.minimum(values, np.nextafter(right, lo), out=values)
        np.maximum(values, left, out=values)
        out[:, j] = values
    return out


def lhs(space: ParameterSpace, count: int, seed: int) -> list[ParameterSet]:
    """Latin hypercube draw as ParameterSet objects (see lhs_matrix)."""
    matrix = lhs_matrix(space, count, seed)
    return [ParameterSet(values=tuple(map(float, row))) for row in matrix]


class _Evaluator:
    """Counts calls and converts objective failures into -inf fitness."""

    def __init__(self, objective, space: ParameterSpace, budget: int):
        self.objective = objective
        self.space = space
        self.budget = budget
        self.count = 0
        self.failures = 0

    @property
    def exhausted(self) -> bool:
        return self.count >= self.budget

    def __call__(self, x: np.ndarray) -> float:
        self.count += 1
        try:
            value = float(self.objective(self.space.make_set(x)))
        except FluxmapError:
            self.failures += 1
            return -np.inf
        if not np.isfinite(value):
            self.failures += 1
            return -np.inf
        return value


def _triangular_pick(rng: np.random.Generator, m: int, q: int) -> np.ndarray:
    """q distinct indices from 0..m-1, better ranks more likely."""
    weights = (m - np.arange(m)).astype(float)
    return rng.choice(m, size=q, replace=False, p=weights / weights.sum())


def _hypercube_sample(rng: np.random.Generator, points: np.ndarray) -> np.ndarray:
    mins = points.min(axis=0)
    maxs = points.max(axis=0)
    return rng.uniform(mins, maxs)


def _evolve_complex(rng, cx, cf, evaluator, lower, upper, steps, q):
    """Competitive evolution of one complex, in place.

    Each step draws a rank-weighted sub-complex, reflects its worst point
    through the centroid of the rest, falls back to contraction, then to a
    uniform draw from the complex's bounding box.
    """
    m = cx.shape[0]
    for _ in range(steps):
        if evaluator.exhausted:
            return
        order = np.argsort(-cf, kind="stable")
        cx[:] = cx[order]
        cf[:] = cf[order]
        picks = np.sort(_triangular_pick(rng, m, q))
        sub_x = cx[picks]
        sub_f = cf[picks]
        worst = q - 1
        centroid = sub_x[:worst].mean(axis=0)

        new_x = 2.0 * centroid - sub_x[worst]
        if np.all((new_x >= lower) & (new_x <= upper)):
            new_f = evaluator(new_x)
        else:
            new_x = _hypercube_sample(rng, cx)
            new_f = evaluator(new_x)
        accept = new_f > sub_f[worst]
        if not accept and not evaluator.exhausted:
            new_x = 0.5 * (centroid + sub_x[worst])
            new_f = evaluator(new_x)
            accept = new_f > sub_f[worst]
            if not accept and not evaluator.exhausted:
                # last resort: a fresh draw from the complex's bounding
                # box replaces the worst point even if it scores lower
                new_x = _hypercube_sample(rng, cx)
                new_f = evaluator(new_x)
                accept = True
        if accept:
            cx[picks[worst]] = new_x
            cf[picks[worst]] = new_f


def sce_optimize(objective, space: ParameterSpace, config: SceConfig) -> SearchResult:
    """Maximize `objective` over `space` by shuffled complex evolution.

    Deterministic for a given config; stops when the eval budget is spent
    or the best value improved by less than convergence_tol (relative)
    over the last convergence_window shuffling loops.
    """
    d = space.ndim
    if config.points_per_complex < d + 2:
        raise DataError(
            f"points_per_complex must be >= ndim + 2 ({d + 2}), "
            f"got {config.points_per_complex}"
        )
    m = config.points_per_complex
    npt = config.n_complexes * m
    q = d + 1
    steps = 2 * d + 1
    lower, upper = space.lower, space.upper

    rng = substream(config.seed, _TAG_SCE)
    evaluator = _Evaluator(objective, space, config.max_evals)

    pop_x = rng.uniform(lower, upper, size=(npt, d))
    pop_f = np.array([evaluator(x) for x in pop_x[: config.max_evals]])
    if pop_f.size < npt:
        pop_x = pop_x[: pop_f.size]
    order = np.argsort(-pop_f, kind="stable")
    pop_x, pop_f = pop_x[order], pop_f[order]
    trace = [float(pop_f[0])]

    while evaluator.count < config.max_evals and pop_x.shape[0] == npt:
        for ci in range(config.n_complexes):
            idx = np.arange(ci, npt, config.n_complexes)
            cx = pop_x[idx].copy()
            cf = pop_f[idx].copy()
            _evolve_complex(rng, cx, cf, evaluator, lower, upper, steps, q)
            pop_x[idx] = cx
            pop_f[idx] = cf
        order = np.argsort(-pop_f, kind="stable")
        pop_x, pop_f = pop_x[order], pop_f[order]
        trace.append(float(pop_f[0]))

        w = config.convergence_window
        if len(trace) > w:
            then, now = trace[-1 - w], trace[-1]
            if now - then < config.convergence_tol * abs(then):
                break

    best = SearchResult(
        best_params=ParameterSet(values=tuple(map(float, pop_x[0]))),
        best_value=float(pop_f[0]),
        evals_used=evaluator.count,
        trace=tuple(trace),
        failures=evaluator.failures,
    )
    return best


def sce_repeats(objective, space: ParameterSpace, config: SceConfig,
                repeats: int = 10, threads: int = 1) -> tuple[float, list[SearchResult]]:
    """Run the search `repeats` times with seeds seed+0 .. seed+repeats-1.

    Returns the highest best_value across repeats and all individual
    results in seed order.  Repeats run on a thread pool when threads > 1;
    the outcome is identical either way.
    """
    if repeats < 1:
        raise DataError("repeats must be >= 1")
    configs = [replace(config, seed=config.seed + i) for i in range(repeats)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda c: sce_optimize(objective, space, c), configs
            ))
    else:
        results = [sce_optimize(objective, space, c) for c in configs]
    hmv = max(r.best_value for r in results)
    return hmv, results


def write_parameter_sets_csv(path, space: ParameterSpace, matrix: np.ndarray,
                             comments: list[str] | None = None) -> None:
    """Stream `run_id,<param names...>` rows to a CSV file."""
    with open(path, "w", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(("run_id",) + space.names)
        for i, row in enumerate(matrix):
            writer.writerow([i] + [repr(float(v)) for v in row])


def read_parameter_sets_csv(path, space: ParameterSpace) -> np.ndarray:
    """Read a file written by write_parameter_sets_csv; validates names."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}")
    with fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path} has no header row")
    header = tuple(rows[0])
    if header != ("run_id",) + space.names:
        raise DataError(f"{path} header {header} does not match the space")
    out = np.empty((len(rows) - 1, space.ndim))
    for i, row in enumerate(rows[1:]):
        if len(row) != space.ndim + 1:
            raise DataError(f"{path} row {i + 2} has {len(row)} fields")
        try:
            out[i] = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise DataError(f"{path} row {i + 2}: {exc}")
    return out
