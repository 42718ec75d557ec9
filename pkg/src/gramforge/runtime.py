"""Support types imported by generated grammar modules."""

from __future__ import annotations

__all__ = ["Cell", "Break", "StaticNode", "OpaqueRef", "OpaqueMutRef", "InvalidPath"]


class InvalidPath(LookupError):
    """A path step indexes past the children of the node it addresses."""

    def __init__(self, index: int, depth: int):
        super().__init__(f"child index {index} out of range at depth {depth}")
        self.index = index
        self.depth = depth


class Cell:
    """Separately allocated holder for a child that would otherwise make a type cycle."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"Cell({self.value!r})"


class Break:
    """Returned from ``Visitor.visit`` to stop the whole traversal with ``value``."""

    __slots__ = ("value",)

    def __init__(self, value=None):
        self.value = value

    def __repr__(self):
        return f"Break({self.value!r})"


class StaticNode:
    """Base of every generated node type.

    Subclasses provide ``ID``, ``DEF``, ``children()``, ``set_child()``,
    ``visit_each()``, ``clone()`` and the generation entry points.
    """

    __slots__ = ()
    BACKEND = None  # set by the loader on the generated module's classes
    NAMESPACE: dict = {}  # globals of the generated module, filled in by its footer

    @classmethod
    def generate(cls, sampler, generators=()):
        """Build a fresh instance by asking ``sampler`` for every choice."""
        backend = cls.BACKEND
        if backend is None:  # module imported directly rather than through a loader
            from types import SimpleNamespace
            from .static import StaticBackend
            backend = StaticBackend.from_module(SimpleNamespace(**cls.NAMESPACE))
        return backend.engine(sampler, generators).generate(cls.ID)

    def to_bytes(self) -> bytes:
        out: list[bytes] = []
        self._w(out)
        return b"".join(out)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_bytes()!r})"


class OpaqueRef:
    """Read-only view over a node of any type of one grammar."""

    __slots__ = ("node",)
    VARIANTS: tuple = ()

    def __init__(self, node):
        if type(node) not in self._VARIANT_SET:
            raise TypeError(f"{type(node).__name__} is not a node type of this grammar")
        self.node = node

    def downcast(self, cls):
        """The wrapped node if it has exactly type ``cls``, else None."""
        node = self.node
        return node if type(node) is cls else None

    def definition(self):
        return self.node.definition()

    def children(self):
        return self.node.children()

    def visit_each(self, visitor):
        return self.node.visit_each(visitor)

    def __eq__(self, other):
        return type(other) is type(self) and other.node is self.node

    def __hash__(self):
        return id(self.node)

    def __repr__(self):
        return f"{type(self).__name__}({self.node!r})"


class OpaqueMutRef(OpaqueRef):
    """Mutable view: additionally allows replacing children in place."""

    __slots__ = ()

    def downcast_mut(self, cls):
        return self.downcast(cls)

    def set_child(self, index: int, value) -> None:
        self.node.set_child(index, value)
