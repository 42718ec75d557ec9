"""Grammar-based fuzzing through generated derivation-tree types.

Typical use::

    from gramforge import load, RandomSampler

    backend = load("expr")                    # bundled grammar, static backend
    tree = backend.generate(RandomSampler(7))
    print(tree.to_bytes())
"""

from __future__ import annotations

from pathlib import Path

from .dynamic import DynamicBackend, DynNode, load_dynamic
from .generation import (DepthExceeded, DepthLimiter, Flattener, GenContext, GenerationError,
                         GenerationFailed, Generator, RetryExhausted, depth_limiter, flattener_for)
from .grammar import GrammarAst, GrammarError, format_grammar, load_grammar, parse_grammar
from .graph import GrammarGraph, Kind, build_graph, compile_grammar, mark_indirection
from .runtime import Break, InvalidPath
from .sampling import RandomSampler, RecordingSampler, Sampler, ScriptedSampler
from .static import StaticBackend, load_static

__version__ = "0.1.0"

__all__ = [
    "load", "load_graph", "DynamicBackend", "DynNode", "load_dynamic", "StaticBackend", "load_static",
    "DepthExceeded", "DepthLimiter", "Flattener", "GenContext", "GenerationError", "GenerationFailed",
    "Generator", "RetryExhausted", "depth_limiter", "flattener_for", "GrammarAst", "GrammarError",
    "format_grammar", "load_grammar", "parse_grammar", "GrammarGraph", "Kind", "build_graph",
    "compile_grammar", "mark_indirection", "Break", "InvalidPath", "RandomSampler",
    "RecordingSampler", "Sampler", "ScriptedSampler", "__version__",
]


def load_graph(grammar: str | Path) -> GrammarGraph:
    """Compile a grammar given as a file path or the name of a bundled grammar."""
    p = Path(grammar)
    if not p.exists():
        from .corpus import corpus_path
        try:
            p = corpus_path(str(grammar))
        except FileNotFoundError:
            raise FileNotFoundError(f"no grammar file or bundled grammar named {str(grammar)!r}") from None
    return compile_grammar(load_grammar(p))


def load(grammar: str | Path, backend: str = "static"):
    """A ready-to-use backend for ``grammar`` (``"static"`` or ``"dynamic"``)."""
    graph = load_graph(grammar)
    if backend == "static":
        return load_static(graph)
    if backend == "dynamic":
        return load_dynamic(graph)
    raise ValueError(f"unknown backend {backend!r}")
