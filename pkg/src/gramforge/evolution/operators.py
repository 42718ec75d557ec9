"""In-place mutation and crossover on derivation trees of either backend."""

from __future__ import annotations

from ..generation import DepthExceeded, GenContext
from ..runtime import InvalidPath
from ..sampling import Sampler
from ..visitors import find_same_type_subtrees, resolve_path

__all__ = ["mutate", "crossover", "replace_at", "NoCandidate"]


class NoCandidate(LookupError):
    """The second parent has no subtree of the required type."""


def replace_at(tree, path, new):
    """Put ``new`` at ``path`` and return the (possibly new) root."""
    if not path:
        return new
    parent = resolve_path(tree, path[:-1])
    i = path[-1]
    if not 0 <= i < len(parent.children()):
        raise InvalidPath(i, len(path) - 1)
    parent.set_child(i, new)
    return tree


def mutate(tree, path, ctx: GenContext):
    """Regenerate the subtree at ``path`` in place; returns the root.

    The new subtree is generated at its own depth, so a depth limit installed
    in ``ctx`` bounds the whole tree.  Raises ``DepthExceeded`` when the node
    already sits too deep for the limit.
    """
    if not path:
        return ctx.generate(tree.ID, 1)
    fast = getattr(tree, "_mutate", None)
    table = ctx._table
    if fast is not None and table is not None and table[tree.ID] is type(tree)._gen and min(path) >= 0:
        # generated classes regenerate the child with its type known statically
        try:
            fast(path, 0, len(path) - 1, ctx)
            return tree
        except IndexError:
            pass  # report it below, with the depth at which the path breaks
        except RecursionError:
            raise DepthExceeded(resolve_path(tree, path).ID) from None
    parent = resolve_path(tree, path[:-1])
    i = path[-1]
    kids = parent.children()
    if not 0 <= i < len(kids):
        raise InvalidPath(i, len(path) - 1)
    parent.set_child(i, ctx.generate(kids[i].ID, len(path) + 1))
    return tree


def crossover(tree1, tree2, path1, sampler: Sampler):
    """Swap the subtree at ``path1`` in ``tree1`` with a same-type subtree of ``tree2``.

    The partner subtree is chosen uniformly with ``sampler``.  Both trees are
    modified in place; returns the two (possibly new) roots.
    """
    node1 = resolve_path(tree1, path1)
    nid = node1.definition().id
    cands = find_same_type_subtrees(tree2, nid)
    if not cands:
        raise NoCandidate(f"no subtree of node {nid} in the second parent")
    path2 = cands[sampler.sample_alt(len(cands), nid)]
    node2 = resolve_path(tree2, path2)
    return replace_at(tree1, path1, node2), replace_at(tree2, path2, node1)
