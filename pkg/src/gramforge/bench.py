"""Per-operation timing and linear cost models.

Each measurement times a single operation with ``perf_counter_ns`` and
records its size predictors, counted as nonterminal plus terminal nodes:

=========  =======================================================
generate   ``n``: the new tree
check      ``n``: the checked tree
mutate     ``n``: the tree, ``m``: the new subtree
crossover  ``n1``, ``n2``: both trees, ``m1``, ``m2``: swapped subtrees
=========  =======================================================

Inputs are prepared (and cloned) outside the timed region.  A cost model is
an ordinary least-squares fit without intercept, ``ns ~ sum(beta_j * x_j)``.
"""

from __future__ import annotations

import gc
import json
import random
import time
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .evolution.constraints import check
from .evolution.operators import crossover, mutate
from .generation import DepthExceeded, DepthLimiter
from .sampling import RandomSampler
from .visitors import count_fandango_nodes, iter_nodes, resolve_path

__all__ = ["Measurement", "CostModel", "SingularDesign", "OPS", "PREDICTORS", "run_bench",
           "fit_model", "write_jsonl", "read_jsonl", "format_report"]

OPS = ("generate", "check", "mutate", "crossover")
PREDICTORS = {"generate": ("n",), "check": ("n",), "mutate": ("n", "m"),
              "crossover": ("n1", "n2", "m1", "m2")}
MIN_SAMPLES_PER_COEF = 10
WARMUP_FRACTION = 0.01


class SingularDesign(ValueError):
    """The predictor matrix does not have full column rank.

    ``fallback`` holds the mean time per unit of the first predictor, the
    usable summary when no regression is possible.
    """

    def __init__(self, msg: str, fallback: float):
        super().__init__(msg)
        self.fallback = fallback


@dataclass(frozen=True)
class Measurement:
    op: str
    predictors: tuple[int, ...]
    ns: int

    def to_json(self) -> str:
        return json.dumps({"op": self.op, "predictors": list(self.predictors), "ns": self.ns})


def _random_path(tree, rng: random.Random):
    paths = [p for p, _ in iter_nodes(tree)]
    return paths[rng.randrange(len(paths))]


def run_bench(backend, op: str, budget: float, *, seed: int = 0, max_depth: int | None = None,
              pool_size: int = 64, constraints=None) -> list[Measurement]:
    """Time ``op`` repeatedly for ``budget`` seconds; the first 1% is warm-up and discarded.

    ``check`` evaluates ``constraints`` (required for that operation) on
    trees from the pool.

    The garbage collector is paused while timing (as ``timeit`` does) and
    run between measurements every few hundred operations.
    """
    if op not in OPS:
        raise ValueError(f"unknown operation {op!r}; expected one of {OPS}")
    if budget <= 0:
        raise ValueError("budget must be positive")
    if op == "check":
        if constraints is None:
            raise ValueError("the check operation needs constraints")
        constraints = list(constraints)
        for c in constraints:
            c.prepare(backend.graph)
    rng = random.Random(seed)
    gens = [DepthLimiter(max_depth)] if max_depth is not None else []
    ctx = backend.engine(RandomSampler(seed), gens)
    pool = [ctx.generate() for _ in range(pool_size)] if op != "generate" else []
    sizes = [count_fandango_nodes(t) for t in pool]
    clock = time.perf_counter_ns
    start = clock()
    warm_end = start + int(budget * WARMUP_FRACTION * 1e9)
    stop = start + int(budget * 1e9)
    out: list[Measurement] = []
    enabled = gc.isenabled()
    gc.disable()
    try:
        _loop(op, ctx, pool, sizes, rng, clock, warm_end, stop, out, constraints)
    finally:
        if enabled:
            gc.enable()
    return out


def _loop(op, ctx, pool, sizes, rng, clock, warm_end, stop, out, constraints):
    graph = ctx.graph
    k = 0
    while True:
        k += 1
        if k % 256 == 0:
            gc.collect(0)
        now = clock()
        if now >= stop:
            break
        if op == "generate":
            t0 = clock()
            tree = ctx.generate()
            t1 = clock()
            x = (count_fandango_nodes(tree),)
        elif op == "check":
            j = rng.randrange(len(pool))
            tree = pool[j]
            t0 = clock()
            check(tree, constraints, graph)
            t1 = clock()
            x = (sizes[j],)
        elif op == "mutate":
            j = rng.randrange(len(pool))
            tree = pool[j].clone()
            path = _random_path(tree, rng)
            t0 = clock()
            try:
                tree = mutate(tree, path, ctx)
            except DepthExceeded:
                continue
            t1 = clock()
            x = (sizes[j], count_fandango_nodes(resolve_path(tree, path)))
        else:
            a, b = rng.randrange(len(pool)), rng.randrange(len(pool))
            t1_, t2_ = pool[a].clone(), pool[b].clone()
            path = _random_path(t1_, rng)
            m1 = count_fandango_nodes(resolve_path(t1_, path))
            sampler = ctx.sampler
            t0 = clock()
            try:
                r1, r2 = crossover(t1_, t2_, path, sampler)
            except LookupError:
                continue
            t1 = clock()
            m2 = count_fandango_nodes(resolve_path(r1, path))
            x = (sizes[a], sizes[b], m1, m2)
        if t0 >= warm_end:
            out.append(Measurement(op, x, t1 - t0))


@dataclass(frozen=True)
class CostModel:
    op: str
    names: tuple[str, ...]
    coef: tuple[float, ...]
    r2: float
    samples: int

    def __getitem__(self, name: str) -> float:
        return self.coef[self.names.index(name)]

    def predict(self, x: Sequence[float]) -> float:
        return float(np.dot(self.coef, x))

    def to_dict(self) -> dict:
        return {"op": self.op, "coef": dict(zip(self.names, self.coef)), "r2": self.r2,
                "samples": self.samples}


def fit_model(measurements: Sequence[Measurement], names: Sequence[str] | None = None) -> CostModel:
    """Least-squares fit of ``ns`` on the predictors, through the origin."""
    if not measurements:
        raise ValueError("no measurements to fit")
    op = measurements[0].op
    names = tuple(names or PREDICTORS.get(op, tuple(f"x{i}" for i in range(len(measurements[0].predictors)))))
    X = np.array([m.predictors for m in measurements], dtype=float)
    y = np.array([m.ns for m in measurements], dtype=float)
    if X.ndim != 2 or X.shape[1] != len(names):
        raise ValueError("predictor count does not match the names")
    if len(y) < MIN_SAMPLES_PER_COEF * X.shape[1]:
        raise ValueError(f"need at least {MIN_SAMPLES_PER_COEF * X.shape[1]} measurements, got {len(y)}")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        pos = X[:, 0] > 0
        fallback = float(np.mean(y[pos] / X[pos, 0])) if pos.any() else float("nan")
        raise SingularDesign(f"design matrix for {op!r} has rank {rank} < {X.shape[1]}", fallback)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return CostModel(op, names, tuple(float(c) for c in coef), r2, len(measurements))


def write_jsonl(stream: TextIO, measurements: Iterable[Measurement], **extra) -> None:
    for m in measurements:
        row = {"op": m.op, "predictors": list(m.predictors), "ns": m.ns}
        row.update(extra)
        stream.write(json.dumps(row) + "\n")


def read_jsonl(stream: TextIO) -> list[dict]:
    return [json.loads(line) for line in stream if line.strip()]


def format_report(rows: Iterable[dict]) -> str:
    """Table of fitted models grouped by grammar, backend and operation.

    ``rows`` are JSON-lines records with ``op``, ``predictors`` and ``ns``, plus
    optional ``grammar`` and ``backend`` keys.
    """
    groups: dict[tuple[str, str, str], list[Measurement]] = {}
    for r in rows:
        key = (r.get("grammar", "-"), r.get("backend", "-"), r["op"])
        groups.setdefault(key, []).append(Measurement(r["op"], tuple(r["predictors"]), r["ns"]))
    lines = [f"{'grammar':<10} {'backend':<8} {'op':<10} {'coefficients (ns per node)':<52} {'R2':>6} {'samples':>8}"]
    for (g, b, op), ms in sorted(groups.items()):
        try:
            model = fit_model(ms)
            coefs = "  ".join(f"{n}={c:.1f}" for n, c in zip(model.names, model.coef))
            lines.append(f"{g:<10} {b:<8} {op:<10} {coefs:<52} {model.r2:>6.3f} {model.samples:>8}")
        except SingularDesign as exc:
            text = f"singular design; {exc.fallback:.1f} ns per {PREDICTORS.get(op, ('x0',))[0]}"
            lines.append(f"{g:<10} {b:<8} {op:<10} {text:<52} {'-':>6} {len(ms):>8}")
        except ValueError as exc:
            lines.append(f"{g:<10} {b:<8} {op:<10} {str(exc):<52} {'-':>6} {len(ms):>8}")
    return "\n".join(lines)
