"""Topological code families, Pauli operators and decoding graphs.

Four CSS code families on square lattices are supported:

``toric``
    Kitaev's ``[[2d^2, 2, d]]`` code.  Qubits live on the edges of a periodic
    ``d x d`` lattice, drawn on a doubled ``2d x 2d`` grid where a qubit sits
    at ``(y, x)`` with ``y + x`` odd.  Qubit index is ``y * d + x // 2``
    (row-major over the doubled grid).  X checks sit on plaquettes at
    ``(odd, odd)`` sites, Z checks on vertices at ``(even, even)`` sites.
``rotated_toric``
    ``[[d^2, 2, d]]`` for even ``d``.  Qubits on the vertices of a periodic
    ``d x d`` grid, index ``r * d + c``.  The face with top-left corner
    ``(r, c)`` is an X check if ``r + c`` is even, otherwise a Z check.
``surface``
    ``[[d^2 + (d-1)^2, 1, d]]`` planar code on a ``(2d-1) x (2d-1)`` grid.
    Qubits at ``y + x`` even, numbered row-major over those sites.  X checks
    at ``(even, odd)`` sites, Z checks at ``(odd, even)`` sites.
``rotated_surface``
    ``[[d^2, 1, d]]`` for odd ``d``.  Qubits ``r * d + c``; bulk faces as in
    the rotated toric code plus weight-2 X checks on the top/bottom edges and
    weight-2 Z checks on the left/right edges.

Checks are numbered row-major by their lattice coordinate.  Phases are
ignored everywhere.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class CodeFamily(str, enum.Enum):
    TORIC = "toric"
    ROTATED_TORIC = "rotated_toric"
    SURFACE = "surface"
    ROTATED_SURFACE = "rotated_surface"


class CheckBasis(str, enum.Enum):
    """Which stabilizers form the vertices of a decoding graph.

    ``X`` checks detect Z errors, ``Z`` checks detect X errors.
    """

    X = "X_checks"
    Z = "Z_checks"


class CodeError(ValueError):
    """Invalid code parameters or contract violations on code objects."""


@dataclass(frozen=True)
class CodeSpec:
    family: CodeFamily
    d: int

    def __post_init__(self):
        object.__setattr__(self, "family", CodeFamily(self.family))
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise CodeError(f"distance must be an integer >= 2, got {self.d!r}")
        if self.family is CodeFamily.ROTATED_TORIC and self.d % 2:
            raise CodeError(f"rotated toric codes need even d, got d={self.d}")
        if self.family is CodeFamily.ROTATED_SURFACE and self.d % 2 == 0:
            raise CodeError(f"rotated surface codes need odd d, got d={self.d}")

    @property
    def n(self) -> int:
        d = self.d
        return {
            CodeFamily.TORIC: 2 * d * d,
            CodeFamily.ROTATED_TORIC: d * d,
            CodeFamily.SURFACE: d * d + (d - 1) ** 2,
            CodeFamily.ROTATED_SURFACE: d * d,
        }[self.family]

    @property
    def k(self) -> int:
        return 2 if self.family in (CodeFamily.TORIC, CodeFamily.ROTATED_TORIC) else 1

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    @property
    def periodic(self) -> bool:
        return self.k == 2

    def __str__(self):
        return f"{self.family.value}[[{self.n},{self.k},{self.d}]]"


class PauliOp:
    """An n-qubit Pauli operator stored as X and Z bit masks (phase dropped)."""

    __slots__ = ("x", "z")

    def __init__(self, x, z):
        x = np.asarray(x, dtype=np.uint8) & 1
        z = np.asarray(z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z masks must be 1-d arrays of equal length")
        self.x = x
        self.z = z

    @classmethod
    def identity(cls, n: int) -> "PauliOp":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_sparse(cls, n: int, x=(), y=(), z=()) -> "PauliOp":
        """Build from qubit index lists for each non-identity component."""
        for name, idx in (("x", x), ("y", y), ("z", z)):
            bad = [q for q in idx if not 0 <= q < n]
            if bad:
                raise ValueError(f"{name} qubits {bad} outside 0..{n - 1}")
        xm = np.zeros(n, np.uint8)
        zm = np.zeros(n, np.uint8)
        xm[list(x)] ^= 1
        zm[list(z)] ^= 1
        xm[list(y)] ^= 1
        zm[list(y)] ^= 1
        return cls(xm, zm)

    @classmethod
    def from_string(cls, s: str) -> "PauliOp":
        s = s.upper()
        bad = set(s) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")
        x = np.array([c in "XY" for c in s], np.uint8)
        z = np.array([c in "ZY" for c in s], np.uint8)
        return cls(x, z)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def commutes(self, other: "PauliOp") -> bool:
        return not (int(self.x @ other.z) + int(self.z @ other.x)) % 2

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        return PauliOp(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other):
        if not isinstance(other, PauliOp):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __str__(self):
        return "".join("IXZY"[a + 2 * b] for a, b in zip(self.x, self.z))

    def __repr__(self):
        return f"PauliOp('{self}')"


@dataclass(frozen=True, eq=False)
class TopologicalCode:
    spec: CodeSpec
    x_stabilizers: tuple[tuple[int, ...], ...]
    z_stabilizers: tuple[tuple[int, ...], ...]
    logical_x: tuple[PauliOp, ...]
    logical_z: tuple[PauliOp, ...]
    qubit_coords: tuple[tuple[int, int], ...]
    x_check_coords: tuple[tuple[int, int], ...] = field(default=())
    z_check_coords: tuple[tuple[int, int], ...] = field(default=())

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def t(self) -> int:
        return self.spec.t

    def stabilizers(self, basis: CheckBasis) -> tuple[tuple[int, ...], ...]:
        return self.x_stabilizers if CheckBasis(basis) is CheckBasis.X else self.z_stabilizers

    @cached_property
    def hx(self) -> np.ndarray:
        return _incidence(self.x_stabilizers, self.n)

    @cached_property
    def hz(self) -> np.ndarray:
        return _incidence(self.z_stabilizers, self.n)

    def check_matrix(self, basis: CheckBasis) -> np.ndarray:
        return self.hx if CheckBasis(basis) is CheckBasis.X else self.hz

    def stabilizer_paulis(self) -> list[PauliOp]:
        n = self.n
        return [PauliOp.from_sparse(n, x=s) for s in self.x_stabilizers] + [
            PauliOp.from_sparse(n, z=s) for s in self.z_stabilizers
        ]

    def to_dict(self) -> dict:
        return {
            "family": self.spec.family.value,
            "d": self.d,
            "n": self.n,
            "k": self.k,
            "x_stabilizers": [list(s) for s in self.x_stabilizers],
            "z_stabilizers": [list(s) for s in self.z_stabilizers],
            "logical_x": [str(p) for p in self.logical_x],
            "logical_z": [str(p) for p in self.logical_z],
            "qubit_coords": [list(c) for c in self.qubit_coords],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _incidence(stabs: Sequence[Sequence[int]], n: int) -> np.ndarray:
    h = np.zeros((len(stabs), n), np.uint8)
    for i, s in enumerate(stabs):
        h[i, list(s)] = 1
    return h


def gf2_rank(mat: np.ndarray) -> int:
    """Rank of a binary matrix over GF(2)."""
    m = (np.array(mat, dtype=np.uint8) & 1).copy()
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivots = np.flatnonzero(m[rank:, c])
        if not len(pivots):
            continue
        p = rank + pivots[0]
        if p != rank:
            m[[rank, p]] = m[[p, rank]]
        below = np.flatnonzero(m[:, c])
        below = below[below != rank]
        m[below] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def build_code(spec: CodeSpec | CodeFamily | str, d: int | None = None) -> TopologicalCode:
    """Construct the stabilizers, logical operators and coordinates of a code."""
    if not isinstance(spec, CodeSpec):
        spec = CodeSpec(CodeFamily(spec), d)
    builder = {
        CodeFamily.TORIC: _toric,
        CodeFamily.ROTATED_TORIC: _rotated_toric,
        CodeFamily.SURFACE: _surface,
        CodeFamily.ROTATED_SURFACE: _rotated_surface,
    }[spec.family]
    return builder(spec)


def _toric(spec: CodeSpec) -> TopologicalCode:
    d = spec.d
    size = 2 * d
    n = spec.n

    def q(y, x):
        return (y % size) * d + (x % size) // 2

    coords = [None] * n
    for y in range(size):
        for x in range(size):
            if (y + x) % 2:
                coords[q(y, x)] = (y, x)

    def star(y, x):
        return tuple(sorted({q(y - 1, x), q(y + 1, x), q(y, x - 1), q(y, x + 1)}))

    xs, xc, zs, zc = [], [], [], []
    for y in range(size):
        for x in range(size):
            if y % 2 and x % 2:
                xs.append(star(y, x))
                xc.append((y, x))
            elif y % 2 == 0 and x % 2 == 0:
                zs.append(star(y, x))
                zc.append((y, x))
    # Z strings commute with plaquettes, X strings with vertices
    lz1 = [q(2 * r, 1) for r in range(d)]
    lx1 = [q(0, 2 * c + 1) for c in range(d)]
    lz2 = [q(1, 2 * c) for c in range(d)]
    lx2 = [q(2 * r + 1, 0) for r in range(d)]
    return TopologicalCode(
        spec,
        tuple(xs),
        tuple(zs),
        (PauliOp.from_sparse(n, x=lx1), PauliOp.from_sparse(n, x=lx2)),
        (PauliOp.from_sparse(n, z=lz1), PauliOp.from_sparse(n, z=lz2)),
        tuple(coords),
        tuple(xc),
        tuple(zc),
    )


def _rotated_toric(spec: CodeSpec) -> TopologicalCode:
    d = spec.d
    n = spec.n

    def q(r, c):
        return (r % d) * d + (c % d)

    xs, xc, zs, zc = [], [], [], []
    for r in range(d):
        for c in range(d):
            face = tuple(sorted({q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)}))
            if (r + c) % 2 == 0:
                xs.append(face)
                xc.append((r, c))
            else:
                zs.append(face)
                zc.append((r, c))
    row0 = [q(0, c) for c in range(d)]
    col0 = [q(r, 0) for r in range(d)]
    return TopologicalCode(
        spec,
        tuple(xs),
        tuple(zs),
        (PauliOp.from_sparse(n, x=col0), PauliOp.from_sparse(n, x=row0)),
        (PauliOp.from_sparse(n, z=row0), PauliOp.from_sparse(n, z=col0)),
        tuple((r, c) for r in range(d) for c in range(d)),
        tuple(xc),
        tuple(zc),
    )


def _surface(spec: CodeSpec) -> TopologicalCode:
    d = spec.d
    size = 2 * d - 1
    index = {}
    for y in range(size):
        for x in range(size):
            if (y + x) % 2 == 0:
                index[(y, x)] = len(index)
    n = len(index)

    def check(y, x):
        nb = ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1))
        return tuple(sorted(index[p] for p in nb if p in index))

    xs, xc, zs, zc = [], [], [], []
    for y in range(size):
        for x in range(size):
            if (y + x) % 2 == 0:
                continue
            if y % 2 == 0:
                xs.append(check(y, x))
                xc.append((y, x))
            else:
                zs.append(check(y, x))
                zc.append((y, x))
    lz = [index[(0, x)] for x in range(0, size, 2)]
    lx = [index[(y, 0)] for y in range(0, size, 2)]
    return TopologicalCode(
        spec,
        tuple(xs),
        tuple(zs),
        (PauliOp.from_sparse(n, x=lx),),
        (PauliOp.from_sparse(n, z=lz),),
        tuple(index),
        tuple(xc),
        tuple(zc),
    )


def _rotated_surface(spec: CodeSpec) -> TopologicalCode:
    d = spec.d
    n = spec.n

    def q(r, c):
        return r * d + c

    faces = []  # (r, c, is_x, qubits)
    for r in range(-1, d):
        for c in range(-1, d):
            corners = [(r + a, c + b) for a in (0, 1) for b in (0, 1)]
            corners = [(a, b) for a, b in corners if 0 <= a < d and 0 <= b < d]
            is_x = (r + c) % 2 == 0
            bulk = 0 <= r < d - 1 and 0 <= c < d - 1
            top_bottom = (r in (-1, d - 1)) and 0 <= c < d - 1
            left_right = (c in (-1, d - 1)) and 0 <= r < d - 1
            if bulk or (top_bottom and is_x) or (left_right and not is_x):
                faces.append((r, c, is_x, tuple(sorted(q(*p) for p in corners))))
    xs = tuple(f[3] for f in faces if f[2])
    zs = tuple(f[3] for f in faces if not f[2])
    row0 = [q(0, c) for c in range(d)]
    col0 = [q(r, 0) for r in range(d)]
    return TopologicalCode(
        spec,
        xs,
        zs,
        (PauliOp.from_sparse(n, x=col0),),
        (PauliOp.from_sparse(n, z=row0),),
        tuple((r, c) for r in range(d) for c in range(d)),
        tuple((f[0], f[1]) for f in faces if f[2]),
        tuple((f[0], f[1]) for f in faces if not f[2]),
    )


# -- syndromes and logical classification -----------------------------------


def compute_syndrome(code: TopologicalCode, error: PauliOp, basis: CheckBasis) -> np.ndarray:
    """Syndrome bits of ``error`` against the X or Z stabilizers of ``code``."""
    if error.n != code.n:
        raise CodeError(f"error acts on {error.n} qubits, code has {code.n}")
    if CheckBasis(basis) is CheckBasis.X:
        return (code.hx @ error.z) % 2
    return (code.hz @ error.x) % 2


def logical_flips(code: TopologicalCode, residual: PauliOp) -> np.ndarray:
    """Which logical operators anticommute with ``residual``.

    Returns a length-``2k`` bit vector ordered ``(X_1..X_k, Z_1..Z_k)``.
    """
    return np.array(
        [not residual.commutes(op) for op in code.logical_x + code.logical_z], np.uint8
    )


def is_logical_failure(code: TopologicalCode, residual: PauliOp) -> bool:
    """True iff a syndrome-free residual is outside the stabilizer group."""
    if compute_syndrome(code, residual, CheckBasis.X).any() or compute_syndrome(
        code, residual, CheckBasis.Z
    ).any():
        raise CodeError("residual has a nonzero syndrome; the correction did not match")
    return bool(logical_flips(code, residual).any())


# -- decoding graphs -------------------------------------------------------


class DataQubit(NamedTuple):
    qubit: int
    round: int


class Measurement(NamedTuple):
    check: int
    round: int


@dataclass(frozen=True, eq=False)
class DecodingGraph:
    """Check-node graph G_X or G_Z, optionally stacked over syndrome rounds.

    Vertex ``layer * layer_size + v`` is check ``v`` (``v < n_checks``) or a
    virtual boundary node (``v >= n_checks``) in round ``layer``.  Edge
    ``layer * n_qubits + q`` is data qubit ``q`` in that round; the
    measurement edge of check ``c`` between rounds ``l`` and ``l + 1`` comes
    after all data edges, at ``rounds * n_qubits + l * n_checks + c``.
    """

    basis: CheckBasis
    rounds: int
    n_qubits: int
    n_checks: int
    n_virtual: int
    edge_u: tuple[int, ...]
    edge_v: tuple[int, ...]
    adjacency: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def layer_size(self) -> int:
        return self.n_checks + self.n_virtual

    @property
    def n_vertices(self) -> int:
        return self.rounds * self.layer_size

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    @property
    def n_data_edges(self) -> int:
        return self.rounds * self.n_qubits

    @cached_property
    def is_virtual(self) -> tuple[bool, ...]:
        m, size = self.n_checks, self.layer_size
        return tuple(v % size >= m for v in range(self.n_vertices))

    def vertex(self, check: int, layer: int = 0) -> int:
        return layer * self.layer_size + check

    def vertex_info(self, v: int) -> dict:
        layer, local = divmod(v, self.layer_size)
        return {"check_id": local, "is_virtual": local >= self.n_checks, "layer": layer}

    def mechanism(self, e: int) -> DataQubit | Measurement:
        if e < self.n_data_edges:
            layer, q = divmod(e, self.n_qubits)
            return DataQubit(q, layer)
        layer, c = divmod(e - self.n_data_edges, self.n_checks)
        return Measurement(c, layer)

    def data_edge(self, qubit: int, layer: int = 0) -> int:
        return layer * self.n_qubits + qubit

    def measurement_edge(self, check: int, layer: int) -> int:
        return self.n_data_edges + layer * self.n_checks + check

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.value,
            "rounds": self.rounds,
            "vertices": [self.vertex_info(v) for v in range(self.n_vertices)],
            "edges": [
                {
                    "endpoints": [self.edge_u[e], self.edge_v[e]],
                    "mechanism": type(mech).__name__,
                    **mech._asdict(),
                }
                for e, mech in ((e, self.mechanism(e)) for e in range(self.n_edges))
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def build_decoding_graph(
    code: TopologicalCode, basis: CheckBasis | str, rounds: int = 1
) -> DecodingGraph:
    """Build G_X or G_Z, adding one virtual node per dangling qubit."""
    basis = CheckBasis(basis)
    if int(rounds) != rounds or rounds < 1:
        raise CodeError(f"rounds must be a positive integer, got {rounds!r}")
    stabs = code.stabilizers(basis)
    n, m = code.n, len(stabs)
    touching: list[list[int]] = [[] for _ in range(n)]
    for c, s in enumerate(stabs):
        for q in s:
            touching[q].append(c)
    ends = []
    n_virtual = 0
    for q, checks in enumerate(touching):
        if len(checks) == 2:
            ends.append((checks[0], checks[1]))
        elif len(checks) == 1:
            ends.append((checks[0], m + n_virtual))
            n_virtual += 1
        else:
            raise CodeError(f"qubit {q} touches {len(checks)} {basis.value}")
    size = m + n_virtual
    eu, ev = [], []
    for layer in range(rounds):
        off = layer * size
        for a, b in ends:
            eu.append(a + off)
            ev.append(b + off)
    for layer in range(rounds - 1):
        for c in range(m):
            eu.append(layer * size + c)
            ev.append((layer + 1) * size + c)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(rounds * size)]
    for e, (a, b) in enumerate(zip(eu, ev)):
        adj[a].append((e, b))
        adj[b].append((e, a))
    return DecodingGraph(
        basis=basis,
        rounds=int(rounds),
        n_qubits=n,
        n_checks=m,
        n_virtual=n_virtual,
        edge_u=tuple(eu),
        edge_v=tuple(ev),
        adjacency=tuple(tuple(a) for a in adj),
    )


def edge_syndrome(graph: DecodingGraph, edges: Iterable[int]) -> set[int]:
    """Non-virtual vertices with odd incidence to ``edges``."""
    odd: set[int] = set()
    virtual = graph.is_virtual
    for e in edges:
        for v in (graph.edge_u[e], graph.edge_v[e]):
            if not virtual[v]:
                odd ^= {v}
    return odd
