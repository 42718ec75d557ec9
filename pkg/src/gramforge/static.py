"""Backend over a generated module of concrete node classes."""

from __future__ import annotations

import importlib.util
import types
from pathlib import Path
from typing import Sequence

from .codegen import load_module
from .generation import Generator, GenContext
from .graph import GrammarGraph
from .sampling import Sampler

__all__ = ["StaticBackend", "load_static", "load_transpiled"]


class StaticBackend:
    """Generation and node construction through generated classes.

    ``classes[i]`` is the concrete type of node ``i``; each class generates
    its own instances via the ``_gen`` function emitted for it.
    """

    kind = "static"

    def __init__(self, graph: GrammarGraph, module: types.ModuleType):
        self.graph = graph
        self.module = module
        self.classes = module.CLASSES
        if len(self.classes) != len(graph.nodes):
            raise ValueError("generated module does not match the grammar graph")
        self._gen = self.gen_table = tuple(c._gen for c in self.classes)
        self._expand = tuple(c._expand for c in self.classes)
        module.Node.BACKEND = self

    @classmethod
    def from_module(cls, module: types.ModuleType) -> "StaticBackend":
        """Wrap an already imported generated module (e.g. one written by ``transpile``)."""
        graph = GrammarGraph(module.DEFS, module.EDGES, module.START, module.GRAMMAR_NAME)
        return cls(graph, module)

    def expand(self, node_id: int, ctx: GenContext, depth: int):
        return self._gen[node_id](ctx, depth)

    def expand_default(self, node_id: int, ctx: GenContext, depth: int):
        return self._expand[node_id](ctx, depth)

    def engine(self, sampler: Sampler, generators: Sequence[Generator] = ()) -> GenContext:
        return GenContext(self, sampler, generators)

    def generate(self, sampler: Sampler, generators: Sequence[Generator] = (), node_id: int | None = None):
        return GenContext(self, sampler, generators).generate(node_id)

    def node_class(self, node_id: int):
        return self.classes[node_id]

    def serialize(self, tree) -> bytes:
        out: list[bytes] = []
        tree._w(out)
        return b"".join(out)

    def __repr__(self):
        return f"StaticBackend({self.graph.name!r})"


def load_static(graph: GrammarGraph) -> StaticBackend:
    return StaticBackend(graph, load_module(graph))


def load_transpiled(path: str | Path) -> StaticBackend:
    """Import a module file produced by ``gramforge transpile``."""
    path = Path(path)
    spec = importlib.util.spec_from_file_location(path.stem, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return StaticBackend.from_module(module)
