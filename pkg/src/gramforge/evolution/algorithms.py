"""Population search for trees that satisfy a set of constraints.

Two loops share the same variation machinery:

* :func:`fandango_ga` ranks by the sum of constraint scores: each
  generation breeds ``candidates`` children from tournament-picked parents,
  then keeps the elites plus the best children.
* :func:`nsga2` treats each constraint score as an objective and selects a
  (mu + lambda) pool by non-dominated rank, then crowding distance.

Both stop once every member satisfies every constraint, after ``iterations``
generations, or when ``time_budget`` seconds have elapsed.
"""

from __future__ import annotations

import json
import math
import random
import time
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

from ..generation import DepthExceeded, DepthLimiter, Generator, flattener_for
from ..sampling import RandomSampler
from .constraints import Constraint, ConstraintError, ConstraintResult, TreeIndex, UnknownSelector
from .operators import NoCandidate, crossover, mutate

__all__ = ["Individual", "EvolutionResult", "fandango_ga", "nsga2", "nondominated_sort",
           "crowding_distance", "dominates", "Evolver", "DimensionMismatch"]


class DimensionMismatch(ValueError):
    """Objective vectors of different lengths were compared."""


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """``a`` is at least as good everywhere and better somewhere (maximizing)."""
    better = False
    for x, y in zip(a, b):
        if x < y:
            return False
        if x > y:
            better = True
    return better


def nondominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Partition indices into Pareto fronts, best first (all objectives maximized)."""
    n = len(objectives)
    if n and len({len(o) for o in objectives}) > 1:
        raise DimensionMismatch(f"objective vectors have lengths {sorted({len(o) for o in objectives})}")
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(p + 1, n):
            if dominates(objectives[p], objectives[q]):
                dominated_by[p].append(q)
                count[q] += 1
            elif dominates(objectives[q], objectives[p]):
                dominated_by[q].append(p)
                count[p] += 1
    fronts[0] = [p for p in range(n) if count[p] == 0]
    while fronts[-1]:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        fronts.append(sorted(nxt))
    fronts.pop()
    return fronts


def crowding_distance(objectives: Sequence[Sequence[float]], front: Sequence[int]) -> dict[int, float]:
    """Crowding distance of each index in ``front``; boundary points get ``inf``."""
    dist = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: math.inf for i in front}
    m = len(objectives[front[0]])
    for k in range(m):
        order = sorted(front, key=lambda i: (objectives[i][k], i))
        lo, hi = objectives[order[0]][k], objectives[order[-1]][k]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for a, i, b in zip(order, order[1:], order[2:]):
            dist[i] += (objectives[b][k] - objectives[a][k]) / (hi - lo)
    return dist


def _crowding_order(objectives, front) -> list[int]:
    d = crowding_distance(objectives, front)
    return sorted(front, key=lambda i: (-d[i], i))


@dataclass
class Individual:
    tree: object
    results: list[ConstraintResult]
    index: TreeIndex
    _text: bytes | None = field(default=None, repr=False)

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(r.score for r in self.results)

    @property
    def fitness(self) -> float:
        return sum(r.score for r in self.results)

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.results)

    @property
    def text(self) -> bytes:
        if self._text is None:
            self._text = self.index.text(0)
        return self._text

    @property
    def violations(self) -> list[tuple[int, ...]]:
        return [p for r in self.results for p in r.violations]


@dataclass
class EvolutionResult:
    population: list[Individual]
    generations: int
    elapsed: float
    solutions: dict[bytes, object]
    history: list[dict]

    @property
    def satisfied(self) -> bool:
        return all(ind.satisfied for ind in self.population)

    def best(self) -> Individual:
        return max(self.population, key=lambda ind: ind.fitness)


class Evolver:
    """Generation, evaluation and variation shared by both search loops."""

    def __init__(self, backend, constraints: Sequence[Constraint], *, seed: int = 0,
                 max_depth: int | None = None, flatten: Sequence[str] = (),
                 generators: Sequence[Generator] = (), crossover_rate: float = 0.7,
                 tournament: int = 4):
        self.backend = backend
        self.graph = backend.graph
        self.constraints = list(constraints)
        for c in self.constraints:
            c.prepare(self.graph)
        self.rng = random.Random(seed)
        self.sampler = RandomSampler(seed)
        gens = list(generators) + [flattener_for(self.graph, r) for r in flatten]
        if max_depth is not None:
            gens.append(DepthLimiter(max_depth))
        self.max_depth = max_depth
        self.ctx = backend.engine(self.sampler, gens)
        self.crossover_rate = crossover_rate
        self.tournament_size = tournament
        self.solutions: dict[bytes, object] = {}
        self.evaluations = 0
        self._head_ids = sorted(self.graph.heads.values())

    def evaluate(self, tree) -> Individual:
        index = TreeIndex(tree, self.graph)
        results = []
        for i, c in enumerate(self.constraints):
            try:
                results.append(c.evaluate(index))
            except (UnknownSelector, ConstraintError):
                raise
            except Exception as exc:
                raise ConstraintError(i, exc) from exc
        ind = Individual(tree, results, index)
        self.evaluations += 1
        if ind.satisfied and ind.text not in self.solutions:
            self.solutions[ind.text] = tree
        return ind

    def random_individual(self) -> Individual:
        return self.evaluate(self.ctx.generate())

    def _too_deep(self, tree) -> bool:
        if self.max_depth is None:
            return False
        stack = [(1, tree)]
        limit = self.max_depth
        while stack:
            h, n = stack.pop()
            if h > limit:
                return True
            stack.extend((h + 1, c) for c in n.children())
        return False

    def _entry_of(self, index: TreeIndex, path) -> int:
        e = 0
        for j in path:
            c = e + 1
            for _ in range(j):
                c = index.end[c]
            e = c
        return e

    def _random_entry(self, index: TreeIndex, lo: int, hi: int) -> int:
        """A nonterminal entry in ``[lo, hi)``: first a rule present there, then one of its instances.

        Picking the rule first keeps rare high-level rules from being drowned
        out by the many character-level nodes.  Returns ``lo`` when the range
        holds no nonterminal.
        """
        groups = []
        for hid in self._head_ids:
            lst = index.by_id.get(hid)
            if lst:
                a, b = bisect_left(lst, lo), bisect_left(lst, hi)
                if a < b:
                    groups.append((lst, a, b))
        if not groups:
            return lo
        lst, a, b = self.rng.choice(groups)
        return lst[self.rng.randrange(a, b)]

    def mutation_path(self, ind: Individual):
        index = ind.index
        bad = ind.violations
        if bad and self.rng.random() < 0.8:
            v = self._entry_of(index, self.rng.choice(bad))
            e = v if self.rng.random() < 0.5 else self._random_entry(index, v, index.end[v])
        else:
            e = self._random_entry(index, 0, len(index))
        return index.path(e)

    def mutant(self, parent: Individual) -> Individual:
        for _ in range(4):
            path = self.mutation_path(parent)
            child = parent.tree.clone()
            try:
                return self.evaluate(mutate(child, path, self.ctx))
            except DepthExceeded:
                continue
        return self.random_individual()

    def children(self, p1: Individual, p2: Individual) -> list[Individual]:
        if self.rng.random() >= self.crossover_rate:
            return [self.mutant(p1)]
        index = p1.index
        path = index.path(self._random_entry(index, 0, len(index)))
        c1, c2 = p1.tree.clone(), p2.tree.clone()
        try:
            c1, c2 = crossover(c1, c2, path, self.sampler)
        except NoCandidate:
            return [self.mutant(p1)]
        out = [self.evaluate(c) for c in (c1, c2) if not self._too_deep(c)]
        return out or [self.mutant(p1)]

    def tournament(self, pop: list[Individual], key: Callable[[int], object]) -> Individual:
        picks = [self.rng.randrange(len(pop)) for _ in range(self.tournament_size)]
        return pop[max(picks, key=key)]


def _stats(gen: int, start: float, pop: list[Individual], ev: Evolver, **extra) -> dict:
    fit = [ind.fitness for ind in pop]
    row = {"generation": gen, "elapsed_s": round(time.perf_counter() - start, 6),
           "best_fitness": max(fit), "mean_fitness": sum(fit) / len(fit),
           "satisfying": sum(ind.satisfied for ind in pop), "distinct_solutions": len(ev.solutions),
           "evaluations": ev.evaluations}
    row.update(extra)
    return row


def _emit(stream: TextIO | None, row: dict) -> None:
    if stream is not None:
        stream.write(json.dumps(row) + "\n")


def _done(pop, gen, iterations, start, time_budget, stop_when_satisfied) -> bool:
    if stop_when_satisfied and all(ind.satisfied for ind in pop):
        return True
    if iterations is not None and gen >= iterations:
        return True
    return time_budget is not None and time.perf_counter() - start >= time_budget


def fandango_ga(backend, constraints: Sequence[Constraint], *, population: int = 100,
                iterations: int | None = 200, elites: int | None = None, candidates: int | None = None,
                time_budget: float | None = None, stop_when_satisfied: bool = True,
                stats: TextIO | None = None, on_generation: Callable[[int, list], None] | None = None,
                **evolver_kw) -> EvolutionResult:
    """Single-objective search on the summed constraint score, with elitism.

    ``elites`` defaults to a tenth of the population and ``candidates`` to
    twice the population; it must be at least ``population - elites``.
    ``on_generation(gen, population)`` sees the initial population as
    generation 0 and then every later one.
    """
    start = time.perf_counter()
    n_elite = max(1, population // 10) if elites is None else elites
    n_cand = 2 * population if candidates is None else candidates
    if not 0 <= n_elite <= population:
        raise ValueError(f"elites must lie in [0, {population}], got {n_elite}")
    if n_cand < population - n_elite:
        raise ValueError(f"need at least {population - n_elite} candidates, got {n_cand}")
    ev = Evolver(backend, constraints, **evolver_kw)
    pop = [ev.random_individual() for _ in range(population)]
    if on_generation is not None:
        on_generation(0, pop)
    history = []
    gen = 0
    while not _done(pop, gen, iterations, start, time_budget, stop_when_satisfied):
        pop.sort(key=lambda ind: -ind.fitness)
        fit = [ind.fitness for ind in pop]
        key = lambda i: (fit[i], -i)
        cands: list[Individual] = []
        while len(cands) < n_cand:
            cands.extend(ev.children(ev.tournament(pop, key), ev.tournament(pop, key)))
        cands = sorted(cands[:n_cand], key=lambda ind: -ind.fitness)
        pop = pop[:n_elite] + cands[:population - n_elite]
        gen += 1
        row = _stats(gen, start, pop, ev)
        history.append(row)
        _emit(stats, row)
        if on_generation is not None:
            on_generation(gen, pop)
    return EvolutionResult(pop, gen, time.perf_counter() - start, ev.solutions, history)


def nsga2(backend, constraints: Sequence[Constraint], *, population: int = 100,
          iterations: int | None = 200, candidates: int | None = None,
          time_budget: float | None = None, dedup: bool = False,
          niching: Callable[[Sequence[Sequence[float]], list[int]], list[int]] | None = None,
          stop_when_satisfied: bool = True, stats: TextIO | None = None,
          on_generation: Callable[[int, list], None] | None = None, **evolver_kw) -> EvolutionResult:
    """Multi-objective search with one objective per constraint.

    ``niching(objectives, front)`` may replace crowding distance as the order
    in which the last admitted front is truncated.  With ``dedup`` the pool
    keeps one individual per distinct serialization.  Each generation breeds
    ``candidates`` children (default: the population size).
    ``on_generation(gen, population)`` sees the initial population as
    generation 0 and then every later one.
    """
    start = time.perf_counter()
    n_cand = population if candidates is None else candidates
    ev = Evolver(backend, constraints, **evolver_kw)
    order = niching or _crowding_order
    pop = [ev.random_individual() for _ in range(population)]
    if on_generation is not None:
        on_generation(0, pop)
    rank = [0] * len(pop)
    crowd = [0.0] * len(pop)
    history = []
    gen = 0
    while not _done(pop, gen, iterations, start, time_budget, stop_when_satisfied):
        key = lambda i: (-rank[i], crowd[i], -i)
        offspring: list[Individual] = []
        while len(offspring) < n_cand:
            offspring.extend(ev.children(ev.tournament(pop, key), ev.tournament(pop, key)))
        pool = pop + offspring[:n_cand]
        if dedup:
            seen: set[bytes] = set()
            unique = []
            for ind in pool:
                if ind.text not in seen:
                    seen.add(ind.text)
                    unique.append(ind)
            pool = unique
        objs = [ind.scores for ind in pool]
        fronts = nondominated_sort(objs)
        chosen: list[int] = []
        ranks: list[int] = []
        for r, front in enumerate(fronts):
            if len(chosen) + len(front) <= population:
                chosen += front
                ranks += [r] * len(front)
            else:
                rest = order(objs, front)[:population - len(chosen)]
                chosen += rest
                ranks += [r] * len(rest)
            if len(chosen) >= population:
                break
        pop = [pool[i] for i in chosen]
        rank = ranks
        crowd = [0.0] * len(pop)
        by_rank: dict[int, list[int]] = {}
        for j, r in enumerate(rank):
            by_rank.setdefault(r, []).append(j)
        pobjs = [ind.scores for ind in pop]
        for members in by_rank.values():
            for j, d in crowding_distance(pobjs, members).items():
                crowd[j] = d
        gen += 1
        row = _stats(gen, start, pop, ev, front_sizes=[len(f) for f in fronts])
        history.append(row)
        _emit(stats, row)
        if on_generation is not None:
            on_generation(gen, pop)
    return EvolutionResult(pop, gen, time.perf_counter() - start, ev.solutions, history)
