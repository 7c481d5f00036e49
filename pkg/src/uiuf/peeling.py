"""Peeling decoder for erasures on a decoding graph.

The spanning forest of the erased subgraph is built greedily: erased edges
are scanned in increasing index order and kept unless they close a cycle.
Each tree is then rooted (at its lowest-index virtual vertex if it has one)
and peeled from the leaves inward: a leaf edge joins the correction iff its
leaf endpoint is nontrivial, in which case the parent's syndrome bit flips.

On a tree the correction is unique up to the choice of virtual root, so the
greedy scan order is the only tie-break between equivalent erasure
corrections.
"""
from __future__ import annotations

from typing import Iterable

from .codes import DecodingGraph


class PeelingError(ValueError):
    """An erased component holds an odd syndrome and no virtual vertex."""


def spanning_forest(graph: DecodingGraph, edges: Iterable[int]) -> list[int]:
    """Acyclic subset of ``edges`` spanning the same vertices."""
    eu, ev = graph.edge_u, graph.edge_v
    parent: dict[int, int] = {}

    def find(v):
        root = v
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while v != root:
            parent[v], v = root, parent[v]
        return root

    tree = []
    for e in sorted(set(edges)):
        a, b = find(eu[e]), find(ev[e])
        if a != b:
            parent[a] = b
            tree.append(e)
    return tree


def peel(
    graph: DecodingGraph, erasure_edges: Iterable[int], nontrivial: Iterable[int]
) -> list[int]:
    """Edges inside ``erasure_edges`` whose syndrome equals ``nontrivial``."""
    eu, ev = graph.edge_u, graph.edge_v
    virtual = graph.is_virtual
    flags = set(nontrivial)
    tree = spanning_forest(graph, erasure_edges)
    adjacency: dict[int, list[tuple[int, int]]] = {}
    for e in tree:
        adjacency.setdefault(eu[e], []).append((e, ev[e]))
        adjacency.setdefault(ev[e], []).append((e, eu[e]))
    stray = flags.difference(adjacency)
    if stray:
        raise PeelingError(f"nontrivial vertices {sorted(stray)} lie outside the erasure")

    correction: list[int] = []
    seen: set[int] = set()
    for root in sorted(adjacency, key=lambda v: (not virtual[v], v)):
        if root in seen:
            continue
        seen.add(root)
        order = [root]
        parent_edge = {}
        for v in order:
            for e, w in adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    parent_edge[w] = e
                    order.append(w)
        for v in reversed(order[1:]):
            if v in flags:
                flags.discard(v)
                e = parent_edge[v]
                correction.append(e)
                u = eu[e] if ev[e] == v else ev[e]
                if not virtual[u]:
                    flags ^= {u}
        if root in flags:
            raise PeelingError(f"component rooted at {root} has odd syndrome parity")
    return correction
