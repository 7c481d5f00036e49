"""UF, iterative UF (IRUF) and union-intersection UF (UIUF) decoders.

The functions in the first half work on decoding-graph edges directly:
``erasures`` are data-edge indices (shared by G_X and G_Z because both
number data edges ``layer * n + qubit``), syndromes are sets of nontrivial
vertices.  G_X yields the Z correction and G_Z yields the X correction.

:class:`UnionFindDecoder` wraps them behind a scikit-learn style estimator.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._kernels import Engine
from ._validation import check_bit_vector, check_bits, check_positive_int
from .clusters import ClusterSet, synd_val
from .codes import (
    CheckBasis,
    CodeSpec,
    DecodingGraph,
    PauliOp,
    TopologicalCode,
    build_code,
    build_decoding_graph,
)
from .peeling import peel


class Algorithm(str, enum.Enum):
    UF = "uf"
    IRUF = "iruf"
    UIUF = "uiuf"


_KERNEL_IDS = {Algorithm.UF: _kernels.UF, Algorithm.IRUF: _kernels.IRUF, Algorithm.UIUF: _kernels.UIUF}


def union_find(
    graph: DecodingGraph,
    erasures: Iterable[int] = (),
    nontrivial: Iterable[int] = (),
    weighted: bool = False,
    trace: Callable[[dict], None] | None = None,
) -> list[int]:
    """Syndrome validation followed by peeling of the grown clusters."""
    nontrivial = list(nontrivial)
    if not nontrivial:
        return []
    clusters = synd_val(graph, erasures, nontrivial, weighted, trace)
    return peel(graph, clusters.grown_edges(), nontrivial)


def _tagged(trace, **labels):
    """A trace callback that prefixes every snapshot with ``labels``."""
    if trace is None:
        return None
    return lambda snapshot: trace({**labels, **snapshot})


def _data_edges(graph: DecodingGraph, edges: Iterable[int]) -> set[int]:
    limit = graph.n_data_edges
    return {e for e in edges if e < limit}


def iruf_iterations(
    gx: DecodingGraph,
    gz: DecodingGraph,
    erasures: Iterable[int],
    sigma_x: Iterable[int],
    sigma_z: Iterable[int],
    iter_max: int,
    weighted: bool = False,
    trace: Callable[[dict], None] | None = None,
) -> Iterator[tuple[list[int], list[int]]]:
    """Yield ``(C_X, C_Z)`` after each IRUF iteration.

    ``C_X`` holds G_Z edges (X fixes), ``C_Z`` holds G_X edges (Z fixes).
    Once an iteration reproduces its predecessor the remaining ones are
    identical, so they are yielded without recomputation.
    """
    erasures = set(erasures)
    sigma_x, sigma_z = list(sigma_x), list(sigma_z)
    cx = union_find(gz, erasures, sigma_z, weighted, _tagged(trace, graph="G_Z", stage="initial"))
    cz: list[int] = []
    fixed = False
    for it in range(1, iter_max + 1):
        if not fixed:
            start = set(cx)
            tx = _tagged(trace, graph="G_X", stage=f"iteration {it}")
            tz = _tagged(trace, graph="G_Z", stage=f"iteration {it}")
            cz = union_find(gx, erasures | _data_edges(gz, cx), sigma_x, weighted, tx)
            cx = union_find(gz, erasures | _data_edges(gx, cz), sigma_z, weighted, tz)
            fixed = set(cx) == start
        yield cx, cz


def iruf(gx, gz, erasures, sigma_x, sigma_z, iter_max: int = 1, weighted: bool = False, trace=None):
    """Iterative UF: alternate X and Z decodes, feeding each output as erasures."""
    check_positive_int(iter_max, "iter_max")
    result = ([], [])
    for result in iruf_iterations(gx, gz, erasures, sigma_x, sigma_z, iter_max, weighted, trace):
        pass
    return result


def intersection(lx: ClusterSet, lz: ClusterSet, n_data_edges: int) -> set[int]:
    """Data edges fully grown in both the G_X and the G_Z clusters."""
    lz_full = lz.support
    return {
        e
        for e, s in lx.support.items()
        if s == 2 and e < n_data_edges and lz_full.get(e, 0) == 2
    }


def uiuf(
    gx: DecodingGraph,
    gz: DecodingGraph,
    erasures: Iterable[int],
    sigma_x: Iterable[int],
    sigma_z: Iterable[int],
    weighted: bool = False,
    trace: Callable[[dict], None] | None = None,
) -> tuple[list[int], list[int], set[int]]:
    """Union, intersection, then two UF decodes on the enlarged erasure.

    Returns ``(C_X, C_Z, shared)`` where ``shared`` are the data edges the
    intersection step added.
    """
    erasures = set(erasures)
    sigma_x, sigma_z = list(sigma_x), list(sigma_z)
    if not sigma_x and not sigma_z:
        return [], [], set()
    lx = synd_val(gx, erasures, sigma_x, weighted, _tagged(trace, graph="G_X", stage="union"))
    lz = synd_val(gz, erasures, sigma_z, weighted, _tagged(trace, graph="G_Z", stage="union"))
    shared = intersection(lx, lz, gx.n_data_edges)
    if trace is not None:
        trace({"stage": "intersection", "shared_edges": sorted(shared)})
    enlarged = erasures | shared
    cx = union_find(gz, enlarged, sigma_z, weighted, _tagged(trace, graph="G_Z", stage="final"))
    cz = union_find(gx, enlarged, sigma_x, weighted, _tagged(trace, graph="G_X", stage="final"))
    return cx, cz, shared


# -- corrections -----------------------------------------------------------


@dataclass
class Correction:
    """Per-round Pauli fixes and measurement-flip estimates.

    ``x_fix[l]`` / ``z_fix[l]`` are the qubits receiving X / Z in round ``l``.
    ``meas_fix_x[l]`` are the X-check outcomes believed flipped in round
    ``l``; likewise ``meas_fix_z``.  Measurement lists have ``rounds - 1``
    entries since the last round is perfect.
    """

    n: int
    x_fix: list[set[int]]
    z_fix: list[set[int]]
    meas_fix_x: list[set[int]] = field(default_factory=list)
    meas_fix_z: list[set[int]] = field(default_factory=list)
    erased: set[int] = field(default_factory=set)

    @property
    def rounds(self) -> int:
        return len(self.x_fix)

    def pauli(self, round: int | None = None) -> PauliOp:
        """The correction of one round, or the product over all rounds."""
        rounds = range(self.rounds) if round is None else [round]
        x = np.zeros(self.n, np.uint8)
        z = np.zeros(self.n, np.uint8)
        for r in rounds:
            x[list(self.x_fix[r])] ^= 1
            z[list(self.z_fix[r])] ^= 1
        return PauliOp(x, z)

    def to_dict(self) -> dict:
        return {
            "x_fix": [sorted(s) for s in self.x_fix],
            "z_fix": [sorted(s) for s in self.z_fix],
            "meas_fix_x": [sorted(s) for s in self.meas_fix_x],
            "meas_fix_z": [sorted(s) for s in self.meas_fix_z],
        }


def _split(graph: DecodingGraph, edges: Iterable[int]) -> tuple[list[set[int]], list[set[int]]]:
    n, m = graph.n_qubits, graph.n_checks
    data = [set() for _ in range(graph.rounds)]
    meas = [set() for _ in range(graph.rounds - 1)]
    for e in edges:
        if e < graph.n_data_edges:
            layer, q = divmod(e, n)
            data[layer].add(q)
        else:
            layer, c = divmod(e - graph.n_data_edges, m)
            meas[layer].add(c)
    return data, meas


def _to_correction(gx, gz, cx, cz, n, shared=()) -> Correction:
    x_fix, meas_z = _split(gz, cx)
    z_fix, meas_x = _split(gx, cz)
    return Correction(n, x_fix, z_fix, meas_x, meas_z, set(shared))


# -- estimator -------------------------------------------------------------


def _as_code(code) -> TopologicalCode:
    if isinstance(code, TopologicalCode):
        return code
    if isinstance(code, CodeSpec):
        return build_code(code)
    family, d = code
    return build_code(family, d)


class UnionFindDecoder(BaseEstimator):
    """Union-find family decoder for a topological code.

    Parameters
    ----------
    algorithm : {"uf", "iruf", "uiuf"}
        Plain UF, iterative UF, or union-intersection UF.
    weighted_growth : bool
        Grow only the smallest invalid clusters in each round.
    iter_max : int
        Number of IRUF iterations; ignored by the other algorithms.
    rounds : int
        Syndrome rounds in the decoding graph (1 = code capacity).
    engine : {"compiled", "reference"}
        ``"compiled"`` runs the numba kernels; ``"reference"`` runs the
        pure-Python implementation.  Both return identical corrections.

    Attributes
    ----------
    code_ : TopologicalCode
    graph_x_, graph_z_ : DecodingGraph
        G_X (X-check vertices) and G_Z (Z-check vertices).
    """

    def __init__(self, algorithm="uf", weighted_growth=False, iter_max=1, rounds=1, engine="compiled"):
        self.algorithm = algorithm
        self.weighted_growth = weighted_growth
        self.iter_max = iter_max
        self.rounds = rounds
        self.engine = engine

    def fit(self, code, y=None):
        """Build the decoding graphs for ``code`` (a code, spec, or ``(family, d)``)."""
        self.algorithm_ = Algorithm(self.algorithm)
        check_positive_int(self.iter_max, "iter_max")
        check_positive_int(self.rounds, "rounds")
        self.code_ = _as_code(code)
        self.graph_x_ = build_decoding_graph(self.code_, CheckBasis.X, self.rounds)
        self.graph_z_ = build_decoding_graph(self.code_, CheckBasis.Z, self.rounds)
        self.n_features_in_ = len(self.code_.x_stabilizers) + len(self.code_.z_stabilizers)
        if self.engine not in ("compiled", "reference"):
            raise ValueError(f"engine must be 'compiled' or 'reference', got {self.engine!r}")
        self.engine_ = None
        if self.engine == "compiled":
            self.engine_ = Engine(
                self.code_,
                self.graph_x_,
                self.graph_z_,
                _KERNEL_IDS[self.algorithm_],
                self.iter_max,
                bool(self.weighted_growth),
            )
        return self

    def decode_edges(self, sigma_x, sigma_z, erasures=(), trace=None) -> tuple[list[int], list[int], set[int]]:
        """Decode vertex-level syndromes; returns ``(C_X, C_Z, extra erasures)``.

        ``trace`` receives a snapshot of the clusters after every growth
        round (see :func:`~uiuf.clusters.jsonl_tracer`); tracing always runs
        the reference implementation.
        """
        check_is_fitted(self, "graph_x_")
        if self.engine_ is not None and trace is None:
            return self.engine_.decode(sigma_x, sigma_z, erasures)
        gx, gz = self.graph_x_, self.graph_z_
        w = bool(self.weighted_growth)
        if self.algorithm_ is Algorithm.UF:
            cx = union_find(gz, erasures, sigma_z, w, _tagged(trace, graph="G_Z", stage="uf"))
            cz = union_find(gx, erasures, sigma_x, w, _tagged(trace, graph="G_X", stage="uf"))
            return cx, cz, set()
        if self.algorithm_ is Algorithm.IRUF:
            cx, cz = iruf(gx, gz, erasures, sigma_x, sigma_z, self.iter_max, w, trace)
            return cx, cz, set()
        return uiuf(gx, gz, erasures, sigma_x, sigma_z, w, trace)

    def decode(self, syndrome_x, syndrome_z, erasures=(), trace=None) -> Correction:
        """Decode one code-capacity shot.

        ``syndrome_x`` / ``syndrome_z`` are bit vectors over the X / Z
        stabilizers; ``erasures`` are erased qubit indices.
        """
        check_is_fitted(self, "graph_x_")
        if self.rounds != 1:
            raise ValueError("decode() is for single-round graphs; use decode_spacetime()")
        sx = check_bit_vector(syndrome_x, self.graph_x_.n_checks, "syndrome_x")
        sz = check_bit_vector(syndrome_z, self.graph_z_.n_checks, "syndrome_z")
        cx, cz, shared = self.decode_edges(np.flatnonzero(sx), np.flatnonzero(sz), erasures, trace)
        return _to_correction(self.graph_x_, self.graph_z_, cx, cz, self.code_.n, shared)

    def decode_spacetime(self, diff_x, diff_z, erasures=(), trace=None) -> Correction:
        """Decode per-round syndrome differences, arrays of shape ``(rounds, m)``.

        ``erasures`` are ``(qubit, round)`` pairs.
        """
        check_is_fitted(self, "graph_x_")
        return decode_spacetime(self, diff_x, diff_z, erasures, trace)

    def predict(self, X) -> np.ndarray:
        """Corrections for a batch of code-capacity syndromes.

        ``X`` has one row per shot: X-check bits followed by Z-check bits.
        Returns the corrections in binary symplectic form ``[x | z]``.
        """
        check_is_fitted(self, "graph_x_")
        X = check_bits(X, self.n_features_in_)
        mx = self.graph_x_.n_checks
        n = self.code_.n
        out = np.zeros((X.shape[0], 2 * n), np.uint8)
        for i, row in enumerate(X):
            cx, cz, _ = self.decode_edges(np.flatnonzero(row[:mx]), np.flatnonzero(row[mx:]))
            out[i, cx] ^= 1
            out[i, n + np.asarray(cz, dtype=int)] ^= 1
        return out


def decode_spacetime(decoder: UnionFindDecoder, diff_x, diff_z, erasures=(), trace=None) -> Correction:
    """Run ``decoder`` on the layered graphs for the given syndrome differences."""
    gx, gz = decoder.graph_x_, decoder.graph_z_
    rounds = gx.rounds
    diff_x = np.asarray(diff_x, np.uint8).reshape(rounds, gx.n_checks)
    diff_z = np.asarray(diff_z, np.uint8).reshape(rounds, gz.n_checks)
    sx = [gx.vertex(c, l) for l, c in zip(*np.nonzero(diff_x))]
    sz = [gz.vertex(c, l) for l, c in zip(*np.nonzero(diff_z))]
    erased = [gx.data_edge(q, l) for q, l in erasures]
    cx, cz, shared = decoder.decode_edges(sx, sz, erased, trace)
    return _to_correction(gx, gz, cx, cz, decoder.code_.n, shared)
