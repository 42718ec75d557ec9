"""Samplers: the source of every choice made while generating a tree.

Generation asks two questions only: which variant of an alternation to
expand, and how many elements a repetition gets.  A sampler answers both.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

__all__ = ["Sampler", "RandomSampler", "ScriptedSampler", "RecordingSampler",
           "ReplaySampler", "ScriptExhausted", "MAX_UNBOUNDED_REPS"]

MAX_UNBOUNDED_REPS = 64

_BLOCK = 4096


class Sampler:
    """Choice protocol.  Subclasses implement the two ``sample_*`` methods."""

    def sample_alt(self, arity: int, node: int) -> int:
        raise NotImplementedError

    def sample_rep(self, lo: int, hi: int | None, node: int) -> int:
        """A count ``>= lo`` and, when ``hi`` is not None, ``< hi``."""
        raise NotImplementedError

    def effective_arity(self, node: int, arity: int) -> None:
        """Told when a generator reinterprets ``node`` as an ``arity``-way choice."""

    def choose(self, node: int, allowed: list[int]) -> int:
        """Pick among a restricted set of variants (used by depth steering)."""
        return allowed[self.sample_alt(len(allowed), node)]


class RandomSampler(Sampler):
    """Uniform choices from numpy's Philox counter-based generator, drawn in blocks.

    Unbounded repetitions draw a geometric count with continue-probability
    1/2, capped at 64.  :meth:`split` derives independent streams through
    numpy's seed sequences.
    """

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        self._seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.seed = self._seq.entropy
        self._gen = np.random.Generator(np.random.Philox(self._seq))
        self._it = iter(())

    def _refill(self) -> float:
        it = iter(self._gen.random(_BLOCK).tolist())
        self._it = it
        return next(it)

    def random(self) -> float:
        u = next(self._it, -1.0)
        return u if u >= 0.0 else self._refill()

    def randrange(self, n: int) -> int:
        return int(self.random() * n)

    def sample_alt(self, arity: int, node: int) -> int:
        u = next(self._it, -1.0)
        if u < 0.0:
            u = self._refill()
        return int(u * arity)

    def sample_rep(self, lo: int, hi: int | None, node: int) -> int:
        u = next(self._it, -1.0)
        if u < 0.0:
            u = self._refill()
        if hi is not None:
            return lo + int(u * (hi - lo))
        # floor(-log2(1 - u)) extra elements, by exact doubling
        v = 1.0 - u
        n = lo
        cap = lo if lo > MAX_UNBOUNDED_REPS else MAX_UNBOUNDED_REPS
        while v <= 0.5 and n < cap:
            v += v
            n += 1
        return n

    def split(self) -> "RandomSampler":
        """An independent stream derived from this one's seed sequence."""
        return RandomSampler(self._seq.spawn(1)[0])

    def __repr__(self):
        return f"RandomSampler(seed={self.seed})"


class ScriptExhausted(IndexError):
    pass


class ScriptedSampler(Sampler):
    """Replays a fixed list of choices, checking each against its valid range."""

    def __init__(self, choices: Iterable[int]):
        self.choices = list(choices)
        self.pos = 0
        self.arities: list[tuple[int, int]] = []

    def _next(self) -> int:
        if self.pos >= len(self.choices):
            raise ScriptExhausted(f"script exhausted after {self.pos} choices")
        v = self.choices[self.pos]
        self.pos += 1
        return v

    def sample_alt(self, arity: int, node: int) -> int:
        v = self._next()
        if not 0 <= v < arity:
            raise ValueError(f"scripted choice {v} out of range for {arity}-way alternation at node {node}")
        return v

    def sample_rep(self, lo: int, hi: int | None, node: int) -> int:
        v = self._next()
        if v < lo or (hi is not None and v >= hi):
            raise ValueError(f"scripted count {v} outside [{lo}, {hi}) at node {node}")
        return v

    def effective_arity(self, node: int, arity: int) -> None:
        self.arities.append((node, arity))

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.choices)


class RecordingSampler(Sampler):
    """Delegates to ``inner`` and records every answer, for later replay."""

    def __init__(self, inner: Sampler):
        self.inner = inner
        self.choices: list[int] = []
        self.calls: list[tuple[str, int]] = []

    def sample_alt(self, arity: int, node: int) -> int:
        v = self.inner.sample_alt(arity, node)
        self.choices.append(v)
        self.calls.append(("alt", node))
        return v

    def sample_rep(self, lo: int, hi: int | None, node: int) -> int:
        v = self.inner.sample_rep(lo, hi, node)
        self.choices.append(v)
        self.calls.append(("rep", node))
        return v

    def effective_arity(self, node: int, arity: int) -> None:
        self.inner.effective_arity(node, arity)


class ReplaySampler(Sampler):
    """Answers alternation choices from ``stack`` first, then defers to ``outer``."""

    __slots__ = ("stack", "pos", "outer")

    def __init__(self, stack: tuple[int, ...], outer: Sampler):
        self.stack = stack
        self.pos = 0
        self.outer = outer

    def sample_alt(self, arity: int, node: int) -> int:
        if self.pos < len(self.stack):
            v = self.stack[self.pos]
            self.pos += 1
            return v
        return self.outer.sample_alt(arity, node)

    def choose(self, node: int, allowed: list[int]) -> int:
        if self.pos < len(self.stack):
            v = self.stack[self.pos]
            self.pos += 1
            return v
        return self.outer.choose(node, allowed)

    def sample_rep(self, lo: int, hi: int | None, node: int) -> int:
        return self.outer.sample_rep(lo, hi, node)

    def effective_arity(self, node: int, arity: int) -> None:
        self.outer.effective_arity(node, arity)
