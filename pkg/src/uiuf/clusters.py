"""Syndrome validation: grow and fuse clusters until each one is valid.

A cluster is valid when it holds an even number of nontrivial checks or
touches a virtual boundary node.  Invalid clusters grow every incident edge
that is not yet fully grown by one half-edge per round; an edge reached twice
(from one cluster on consecutive rounds, or from two clusters in the same
round) becomes fully grown and fuses its endpoints.

State is kept in dictionaries keyed by vertex/edge so that a decode only
touches the part of the graph near the syndrome.
"""
from __future__ import annotations

import json
from typing import Callable, Iterable

from .codes import DecodingGraph


class MalformedSyndromeError(ValueError):
    """The syndrome cannot be matched inside the graph (odd parity, no boundary)."""


class ClusterSet:
    """Union-find forest over the vertices touched by syndrome validation.

    ``support[e]`` is the growth of edge ``e`` in half-edges (0, 1 or 2).
    Per-root bookkeeping (``size``, ``parity``, ``virtual``, ``boundary``) is
    only meaningful at roots.
    """

    def __init__(self, graph: DecodingGraph):
        self.graph = graph
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        self.parity: dict[int, int] = {}
        self.virtual: dict[int, bool] = {}
        self.boundary: dict[int, list[int]] = {}
        self.support: dict[int, int] = {}
        self.full: list[int] = []
        self.invalid: set[int] = set()
        self.rounds = 0

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def add(self, v: int) -> int:
        """Make ``v`` a member of some cluster; return its root."""
        if v in self.parent:
            return self.find(v)
        self.parent[v] = v
        self.size[v] = 1
        self.parity[v] = 0
        self.virtual[v] = self.graph.is_virtual[v]
        self.boundary[v] = [v]
        return v

    def _update_validity(self, root: int) -> None:
        if self.parity[root] and not self.virtual[root]:
            self.invalid.add(root)
        else:
            self.invalid.discard(root)

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size.pop(rb)
        self.parity[ra] ^= self.parity.pop(rb)
        self.virtual[ra] = self.virtual[ra] or self.virtual.pop(rb)
        self.boundary[ra].extend(self.boundary.pop(rb))
        self.invalid.discard(rb)
        self._update_validity(ra)
        return ra

    def roots(self) -> list[int]:
        return [v for v, p in self.parent.items() if v == p]

    def is_valid(self, root: int) -> bool:
        return not self.parity[root] or self.virtual[root]

    def grown_edges(self) -> list[int]:
        """Fully grown edges, in the order they became full."""
        return list(self.full)

    def is_covered(self, e: int) -> bool:
        return self.support.get(e, 0) >= 2

    def members(self) -> dict[int, list[int]]:
        groups: dict[int, list[int]] = {}
        for v in self.parent:
            groups.setdefault(self.find(v), []).append(v)
        return groups

    def snapshot(self) -> dict:
        return {
            "round": self.rounds,
            "clusters": [
                {
                    "root": int(r),
                    "vertices": sorted(int(v) for v in vs),
                    "parity": int(self.parity[r]),
                    "virtual": bool(self.virtual[r]),
                }
                for r, vs in sorted(self.members().items())
            ],
            "half_edges": sorted(int(e) for e, s in self.support.items() if s == 1),
            "full_edges": sorted(int(e) for e in self.full),
        }


def synd_val(
    graph: DecodingGraph,
    erasures: Iterable[int] = (),
    nontrivial: Iterable[int] = (),
    weighted: bool = False,
    trace: Callable[[dict], None] | None = None,
) -> ClusterSet:
    """Grow clusters around ``nontrivial`` checks and ``erasures`` until valid.

    With ``weighted`` only the smallest invalid clusters (by vertex count)
    grow in each round; ties grow together.  ``trace`` receives a snapshot of
    the clusters after initialization and after every growth round.
    """
    cs = ClusterSet(graph)
    virtual = graph.is_virtual
    for v in nontrivial:
        if virtual[v]:
            raise ValueError(f"virtual vertex {v} cannot be nontrivial")
        r = cs.add(v)
        cs.parity[r] ^= 1
        cs._update_validity(r)
    support = cs.support
    eu, ev = graph.edge_u, graph.edge_v
    for e in erasures:
        if support.get(e, 0) == 2:
            continue
        support[e] = 2
        cs.full.append(e)
        cs.add(eu[e])
        cs.add(ev[e])
        cs.union(eu[e], ev[e])
    for v in list(cs.parent):
        cs._update_validity(cs.find(v))
    if trace is not None:
        trace(cs.snapshot())

    adjacency = graph.adjacency
    while cs.invalid:
        growing = list(cs.invalid)
        if weighted:
            smallest = min(cs.size[r] for r in growing)
            growing = [r for r in growing if cs.size[r] == smallest]
        fusion: list[int] = []
        progressed = False
        for root in growing:
            touched: set[int] = set()
            kept: list[int] = []
            for v in cs.boundary[root]:
                open_edge = False
                for e, _ in adjacency[v]:
                    s = support.get(e, 0)
                    if s >= 2:
                        continue
                    if e in touched:
                        # internal edge: grows once per round, not once per endpoint
                        open_edge = True
                        continue
                    touched.add(e)
                    progressed = True
                    if s == 1:
                        support[e] = 2
                        fusion.append(e)
                    else:
                        support[e] = 1
                        open_edge = True
                if open_edge:
                    kept.append(v)
            cs.boundary[root] = kept
        if not progressed:
            raise MalformedSyndromeError(
                "an invalid cluster covers its whole component without reaching a boundary"
            )
        for e in fusion:
            cs.full.append(e)
            cs.add(eu[e])
            cs.add(ev[e])
            cs.union(eu[e], ev[e])
        cs.rounds += 1
        if trace is not None:
            trace(cs.snapshot())
    return cs


def grown_edges(clusters: ClusterSet) -> list[int]:
    return clusters.grown_edges()


def jsonl_tracer(stream) -> Callable[[dict], None]:
    """A ``trace`` callback writing one JSON object per growth round."""

    def write(snapshot: dict) -> None:
        stream.write(json.dumps(snapshot) + "\n")

    return write
