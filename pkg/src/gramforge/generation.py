"""Generation engine shared by the static and dynamic backends.

Nodes generate themselves: the backend walks the grammar graph, asking the
sampler at every alternation and repetition.  Before expanding a node it
consults the generator list; the first generator that offers the node takes
over.  :class:`GenContext` carries that state through one backend.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Sequence

from .graph import GrammarGraph, Kind
from .sampling import ReplaySampler, Sampler

__all__ = [
    "Generator", "GenContext", "Flattener", "DepthLimiter", "ChoiceStack",
    "flattener_for", "depth_limiter",
    "GenerationError", "GenerationFailed", "DepthExceeded", "RetryExhausted", "CyclicAlternation",
    "DEFAULT_RETRIES",
]

DEFAULT_RETRIES = 8
_RECURSION_LIMIT = 8000  # deeper Python recursion overflows the C stack on 3.10


class GenerationError(RuntimeError):
    pass


class DepthExceeded(GenerationError):
    def __init__(self, node: int, depth: int | None = None, limit: float | None = None):
        msg = f"no derivation of node {node} fits"
        if depth is not None:
            msg += f" at depth {depth} under limit {limit}"
        super().__init__(msg)
        self.node = node


class RetryExhausted(GenerationError):
    pass


class GenerationFailed(Exception):
    """Raised by a generator to ask the engine for another attempt."""


class CyclicAlternation(ValueError):
    pass


class Generator:
    """Custom generation for selected nodes.

    ``offered`` must depend on the node id only; it is evaluated once per
    node when a :class:`GenContext` is built.
    """

    def offered(self, node_id: int) -> bool:
        return False

    def generate(self, node_id: int, ctx: "GenContext", depth: int):
        raise NotImplementedError

    def install(self, ctx: "GenContext") -> None:
        """Called once when the generator joins a context."""


class GenContext:
    """One backend plus the sampler and generators driving it.

    Backends read ``sampler``, ``hooks`` and ``limit`` directly in their
    hot loops; ``limit`` is the maximum tree height (``inf`` when unlimited).
    """

    __slots__ = ("backend", "graph", "sampler", "generators", "hooks", "limit", "retries", "_md",
                 "_expand", "_table")

    def __init__(self, backend, sampler: Sampler, generators: Sequence[Generator] = (),
                 retries: int = DEFAULT_RETRIES):
        self.backend = backend
        self.graph: GrammarGraph = backend.graph
        self.sampler = sampler
        self.generators = tuple(generators)
        self.retries = retries
        self.limit = math.inf
        self._md = self.graph.min_depths
        self._expand = backend.expand
        self._table = getattr(backend, "gen_table", None)  # per-node entry points, when the backend has them
        if sys.getrecursionlimit() < _RECURSION_LIMIT:
            sys.setrecursionlimit(_RECURSION_LIMIT)
        hooks = {}
        if self.generators:
            for nid in range(len(self.graph.nodes)):
                for g in self.generators:
                    if g.offered(nid):
                        hooks[nid] = g
                        break
        self.hooks = hooks
        for g in self.generators:
            g.install(self)

    def generate(self, node_id: int | None = None, depth: int = 1):
        """A fresh tree for ``node_id`` (default: the start node) placed at ``depth``."""
        if node_id is None:
            node_id = self.graph.start_node
        md = self._md[node_id]
        if md == math.inf:
            raise DepthExceeded(node_id)
        if depth + md - 1 > self.limit:
            raise DepthExceeded(node_id, depth, self.limit)
        try:
            t = self._table
            if t is not None:
                return t[node_id](self, depth)
            return self._expand(node_id, self, depth)
        except RecursionError:
            raise DepthExceeded(node_id) from None

    def default(self, node_id: int, depth: int):
        """Expand ``node_id`` with the default strategy, skipping its own hook."""
        return self.backend.expand_default(node_id, self, depth)

    def hook(self, node_id: int, depth: int):
        gen = self.hooks[node_id]
        for _ in range(self.retries):
            try:
                return gen.generate(node_id, self, depth)
            except GenerationFailed:
                continue
        raise RetryExhausted(f"{type(gen).__name__} failed {self.retries} times on node {node_id}")

    def fits(self, node_id: int, depth: int) -> bool:
        return depth + self._md[node_id] - 1 <= self.limit

    def steer_alt(self, node_id: int, depth: int) -> int:
        """Variant choice when some variants cannot finish within the limit."""
        limit = self.limit
        md = self._md
        allowed = [i for i, c in enumerate(self.graph.children(node_id)) if depth + md[c] <= limit]
        if not allowed:
            raise DepthExceeded(node_id, depth, limit)
        return self.sampler.choose(node_id, allowed)

    def forced_rep(self, node_id: int, lo: int) -> int:
        """Repetition count when the element cannot fit: as few as allowed."""
        if lo > 0:
            raise DepthExceeded(node_id)
        return 0


@dataclass(frozen=True)
class ChoiceStack:
    """Alternation picks leading from a flattened node to one endpoint."""

    choices: tuple[int, ...]
    endpoint: int
    min_depth: float


class Flattener(Generator):
    """Makes every endpoint reachable through chained alternations equally likely.

    Endpoints are the first non-alternation, non-head nodes on each chain
    (normally terminals).  The stacks are computed once per node.
    """

    def __init__(self, graph: GrammarGraph, node: int):
        self.graph = graph
        self.node = node
        self.stacks = _choice_stacks(graph, node)

    def offered(self, node_id: int) -> bool:
        return node_id == self.node

    def generate(self, node_id: int, ctx: GenContext, depth: int):
        stacks = self.stacks
        outer = ctx.sampler
        outer.effective_arity(node_id, len(stacks))
        limit = ctx.limit
        if all(depth + s.min_depth - 1 <= limit for s in stacks):
            k = outer.sample_alt(len(stacks), node_id)
        else:
            allowed = [i for i, s in enumerate(stacks) if depth + s.min_depth - 1 <= limit]
            if not allowed:
                raise DepthExceeded(node_id, depth, limit)
            k = outer.choose(node_id, allowed)
        ctx.sampler = ReplaySampler(stacks[k].choices, outer)
        try:
            return ctx.default(node_id, depth)
        finally:
            ctx.sampler = outer

    def __repr__(self):
        return f"Flattener(node={self.node}, stacks={len(self.stacks)})"


def _choice_stacks(graph: GrammarGraph, node: int) -> list[ChoiceStack]:
    md = graph.min_depths
    stacks: list[ChoiceStack] = []

    def walk(v: int, prefix: tuple[int, ...], chain: tuple[int, ...]):
        if v in chain:
            raise CyclicAlternation(f"alternation closure of node {node} is cyclic through node {v}")
        kind = graph.nodes[v].kind
        chain = chain + (v,)
        if kind is Kind.HEAD:
            walk(graph.children(v)[0], prefix, chain)
        elif kind is Kind.ALT:
            for i, c in enumerate(graph.children(v)):
                walk(c, prefix + (i,), chain)
        else:
            stacks.append(ChoiceStack(prefix, v, len(chain) - 1 + md[v]))

    walk(node, (), ())
    return stacks


def flattener_for(graph: GrammarGraph, node: int | str) -> Flattener:
    """Flattener over ``node`` (an id or a rule name)."""
    if isinstance(node, str):
        node = graph.head(node)
    return Flattener(graph, node)


class DepthLimiter(Generator):
    """Bounds tree height to ``max_depth`` levels.

    Installing it makes the backends steer choices towards variants whose
    shallowest completion still fits; it never takes over a node itself.
    """

    def __init__(self, max_depth: int):
        if max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        self.max_depth = max_depth

    def install(self, ctx: GenContext) -> None:
        ctx.limit = min(ctx.limit, self.max_depth)

    def __repr__(self):
        return f"DepthLimiter({self.max_depth})"


def depth_limiter(max_depth: int) -> DepthLimiter:
    return DepthLimiter(max_depth)
