"""Compiled union-find kernels.

The modules ``clusters``, ``peeling`` and ``decoders`` are the readable
reference implementation.  This module re-implements the same growth,
fusion, spanning-forest and peeling rules over flat ``int64`` arrays so that
numba can compile them, and adds batch drivers that sample nothing but do
everything else a trial needs: syndrome extraction, decoding, the
syndrome-match check and logical classification.  Corrections agree with the
reference edge for edge (checked by the test-suite).

Graphs are tuples ``(edge_u, edge_v, adj_ptr, adj_edge, virtual, meta)``
with ``meta = [n_data_edges, n_vertices, n_qubits, layer_size, n_checks,
rounds]``.  A workspace is a tuple of scratch arrays sized by its graph; it
is reset after every call and must not be shared between concurrent decodes.

Status codes returned by the kernels are negative on contract violations,
see :data:`STATUS_MESSAGES`.
"""
from __future__ import annotations

import numpy as np
from numba import njit

EU, EV, APTR, AEDGE, VIRT, META = range(6)
(
    PARENT, SIZE, PARITY, CVIRT, BNEXT, BHEAD, BTAIL, VMARK, SUPPORT, ESTAMP,
    TV, TE, FULL, FUS, INV, INV2, CNT, PARENT2, THEAD, SNEXT, SEDGE, SNBR,
    FLAGS, SEEN, ORDER, PEDGE, TV2, KEYS, OUT, BUF, PREV,
) = range(31)

UF, IRUF, UIUF = 0, 1, 2

MALFORMED = -1
VIRTUAL_SYNDROME = -2
STRAY_SYNDROME = -3
ODD_COMPONENT = -4
SYNDROME_MISMATCH = -10
RESIDUAL_SYNDROME = -11

STATUS_MESSAGES = {
    MALFORMED: "an invalid cluster covers its whole component without reaching a boundary",
    VIRTUAL_SYNDROME: "a virtual vertex was marked nontrivial",
    STRAY_SYNDROME: "a nontrivial vertex lies outside the grown clusters",
    ODD_COMPONENT: "a peeled component has odd syndrome parity",
    SYNDROME_MISMATCH: "the correction does not reproduce the syndrome",
    RESIDUAL_SYNDROME: "the residual error has a nonzero syndrome",
}


def graph_arrays(graph) -> tuple:
    """Flatten a :class:`~uiuf.codes.DecodingGraph` for the kernels."""
    n_v = graph.n_vertices
    eu = np.asarray(graph.edge_u, np.int64)
    ev = np.asarray(graph.edge_v, np.int64)
    ptr = np.zeros(n_v + 1, np.int64)
    for v, adj in enumerate(graph.adjacency):
        ptr[v + 1] = ptr[v] + len(adj)
    aedge = np.fromiter((e for adj in graph.adjacency for e, _ in adj), np.int64, int(ptr[-1]))
    virt = np.asarray(graph.is_virtual, np.int64)
    meta = np.array(
        [graph.n_data_edges, n_v, graph.n_qubits, graph.layer_size, graph.n_checks, graph.rounds],
        np.int64,
    )
    return (eu, ev, ptr, aedge, virt, meta)


def workspace(graph) -> tuple:
    """Scratch arrays for one decode at a time on ``graph``."""
    n_v, n_e = graph.n_vertices, graph.n_edges
    sizes = {
        PARENT: n_v, SIZE: n_v, PARITY: n_v, CVIRT: n_v, BNEXT: n_v, BHEAD: n_v,
        BTAIL: n_v, VMARK: n_v, SUPPORT: n_e, ESTAMP: n_e, TV: n_v, TE: n_e,
        FULL: n_e, FUS: n_e, INV: n_v, INV2: n_v, CNT: 8, PARENT2: n_v,
        THEAD: n_v, SNEXT: 2 * n_e, SEDGE: 2 * n_e, SNBR: 2 * n_e, FLAGS: n_v,
        SEEN: n_v, ORDER: n_v, PEDGE: n_v, TV2: n_v, KEYS: n_v, OUT: n_e,
        BUF: 2 * n_e + 1, PREV: n_e,
    }
    arrays = [np.zeros(sizes[i], np.int64) for i in range(31)]
    for i in (PARENT, PARENT2, THEAD):
        arrays[i][:] = -1
    return tuple(arrays)


def code_arrays(code) -> tuple:
    """Stabilizer and logical supports of a code in CSR form.

    ``(x_ptr, x_idx, z_ptr, z_idx, lx_ptr, lx_idx, lz_ptr, lz_idx)``.
    """

    def csr(sets):
        ptr = np.zeros(len(sets) + 1, np.int64)
        for i, s in enumerate(sets):
            ptr[i + 1] = ptr[i] + len(s)
        idx = np.fromiter((q for s in sets for q in s), np.int64, int(ptr[-1]))
        return ptr, idx

    lx = [np.flatnonzero(p.x) for p in code.logical_x]
    lz = [np.flatnonzero(p.z) for p in code.logical_z]
    return (*csr(code.x_stabilizers), *csr(code.z_stabilizers), *csr(lx), *csr(lz))


# -- union-find core -------------------------------------------------------


@njit(cache=True, _nrt=False)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@njit(cache=True, _nrt=False)
def _sift(a, start, end):
    root = start
    while 2 * root + 1 < end:
        child = 2 * root + 1
        if child + 1 < end and a[child] < a[child + 1]:
            child += 1
        if a[root] >= a[child]:
            return
        a[root], a[child] = a[child], a[root]
        root = child


@njit(cache=True, _nrt=False)
def _sort(a, n):
    """Sort ``a[:n]`` in place (heapsort, no allocation)."""
    for start in range(n // 2 - 1, -1, -1):
        _sift(a, start, n)
    for end in range(n - 1, 0, -1):
        a[0], a[end] = a[end], a[0]
        _sift(a, 0, end)


@njit(cache=True, _nrt=False)
def _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, v):
    if parent[v] >= 0:
        return _find(parent, v)
    parent[v] = v
    size[v] = 1
    parity[v] = 0
    cvirt[v] = virt[v]
    bhead[v] = v
    btail[v] = v
    bnext[v] = -1
    tv[cnt[0]] = v
    cnt[0] += 1
    return v


@njit(cache=True, _nrt=False)
def _union(parent, size, parity, cvirt, bnext, bhead, btail, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    parity[ra] ^= parity[rb]
    cvirt[ra] |= cvirt[rb]
    if bhead[rb] >= 0:
        if bhead[ra] >= 0:
            bnext[btail[ra]] = bhead[rb]
        else:
            bhead[ra] = bhead[rb]
        btail[ra] = btail[rb]
    return ra


@njit(cache=True, _nrt=False)
def _reset(W):
    cnt = W[CNT]
    parent, tv = W[PARENT], W[TV]
    for i in range(cnt[0]):
        parent[tv[i]] = -1
    support, te = W[SUPPORT], W[TE]
    for i in range(cnt[1]):
        support[te[i]] = 0
    cnt[0] = 0
    cnt[1] = 0
    cnt[2] = 0


@njit(cache=True, _nrt=False)
def _synd_val(G, W, erase, ne, nontriv, nn, weighted):
    eu, ev, aptr, aedge, virt = G[EU], G[EV], G[APTR], G[AEDGE], G[VIRT]
    parent, size, parity, cvirt = W[PARENT], W[SIZE], W[PARITY], W[CVIRT]
    bnext, bhead, btail = W[BNEXT], W[BHEAD], W[BTAIL]
    vmark, support, estamp = W[VMARK], W[SUPPORT], W[ESTAMP]
    te, full, fus, inv, inv2, cnt, tv = W[TE], W[FULL], W[FUS], W[INV], W[INV2], W[CNT], W[TV]
    cnt[0] = 0
    cnt[1] = 0
    cnt[2] = 0
    for i in range(nn):
        v = nontriv[i]
        if virt[v]:
            return VIRTUAL_SYNDROME
        r = _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, v)
        parity[r] ^= 1
    for i in range(ne):
        e = erase[i]
        if support[e] == 2:
            continue
        support[e] = 2
        te[cnt[1]] = e
        cnt[1] += 1
        full[cnt[2]] = e
        cnt[2] += 1
        _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, eu[e])
        _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, ev[e])
        _union(parent, size, parity, cvirt, bnext, bhead, btail, eu[e], ev[e])

    cnt[3] += 1
    st = cnt[3]
    ninv = 0
    for i in range(cnt[0]):
        r = _find(parent, tv[i])
        if parity[r] and not cvirt[r] and vmark[r] != st:
            vmark[r] = st
            inv[ninv] = r
            ninv += 1

    while ninv > 0:
        smallest = 0
        if weighted:
            smallest = size[inv[0]]
            for i in range(1, ninv):
                if size[inv[i]] < smallest:
                    smallest = size[inv[i]]
        nfus = 0
        progressed = False
        for i in range(ninv):
            r = inv[i]
            if weighted and size[r] != smallest:
                continue
            cnt[3] += 1
            st = cnt[3]
            v = bhead[r]
            head = -1
            tail = -1
            while v >= 0:
                nxt = bnext[v]
                open_edge = False
                for k in range(aptr[v], aptr[v + 1]):
                    e = aedge[k]
                    s = support[e]
                    if s >= 2:
                        continue
                    if estamp[e] == st:
                        open_edge = True
                        continue
                    estamp[e] = st
                    progressed = True
                    if s == 1:
                        support[e] = 2
                        fus[nfus] = e
                        nfus += 1
                    else:
                        support[e] = 1
                        te[cnt[1]] = e
                        cnt[1] += 1
                        open_edge = True
                if open_edge:
                    if tail >= 0:
                        bnext[tail] = v
                    else:
                        head = v
                    tail = v
                v = nxt
            if tail >= 0:
                bnext[tail] = -1
            bhead[r] = head
            btail[r] = tail
        if not progressed:
            return MALFORMED
        for i in range(nfus):
            e = fus[i]
            full[cnt[2]] = e
            cnt[2] += 1
            _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, eu[e])
            _add(parent, size, parity, cvirt, bnext, bhead, btail, tv, cnt, virt, ev[e])
            _union(parent, size, parity, cvirt, bnext, bhead, btail, eu[e], ev[e])
        cnt[3] += 1
        st = cnt[3]
        n2 = 0
        for i in range(ninv):
            r = _find(parent, inv[i])
            if parity[r] and not cvirt[r] and vmark[r] != st:
                vmark[r] = st
                inv2[n2] = r
                n2 += 1
        for i in range(n2):
            inv[i] = inv2[i]
        ninv = n2
    return 0


@njit(cache=True, _nrt=False)
def _peel(G, W, nontriv, nn):
    """Peel the fully grown edges of the last synd_val; result in W[OUT]."""
    eu, ev, virt = G[EU], G[EV], G[VIRT]
    n_v = G[META][1]
    parent2, thead, snext, sedge, snbr = W[PARENT2], W[THEAD], W[SNEXT], W[SEDGE], W[SNBR]
    flags, seen, order, pedge, tv2, keys, out = (
        W[FLAGS], W[SEEN], W[ORDER], W[PEDGE], W[TV2], W[KEYS], W[OUT]
    )
    nfull = W[CNT][2]
    edges = W[FULL]
    _sort(edges, nfull)
    n2 = 0
    ntree = 0
    for i in range(nfull):
        e = edges[i]
        a = eu[e]
        b = ev[e]
        if parent2[a] < 0:
            parent2[a] = a
            tv2[n2] = a
            n2 += 1
        if parent2[b] < 0:
            parent2[b] = b
            tv2[n2] = b
            n2 += 1
        ra = _find(parent2, a)
        rb = _find(parent2, b)
        if ra != rb:
            parent2[ra] = rb
            s = 2 * ntree
            sedge[s] = e
            snbr[s] = b
            snext[s] = thead[a]
            thead[a] = s
            sedge[s + 1] = e
            snbr[s + 1] = a
            snext[s + 1] = thead[b]
            thead[b] = s + 1
            ntree += 1

    status = 0
    for i in range(nn):
        v = nontriv[i]
        flags[v] = 1
        if thead[v] < 0:
            status = STRAY_SYNDROME
    nout = 0
    if status == 0:
        for i in range(n2):
            v = tv2[i]
            keys[i] = v if virt[v] else v + n_v
        _sort(keys, n2)
        ks = keys
        for i in range(n2):
            root = ks[i] if ks[i] < n_v else ks[i] - n_v
            if seen[root]:
                continue
            seen[root] = 1
            order[0] = root
            norder = 1
            j = 0
            while j < norder:
                v = order[j]
                s = thead[v]
                while s >= 0:
                    w = snbr[s]
                    if not seen[w]:
                        seen[w] = 1
                        pedge[w] = sedge[s]
                        order[norder] = w
                        norder += 1
                    s = snext[s]
                j += 1
            for j in range(norder - 1, 0, -1):
                v = order[j]
                if flags[v]:
                    flags[v] = 0
                    e = pedge[v]
                    out[nout] = e
                    nout += 1
                    u = eu[e] if ev[e] == v else ev[e]
                    if not virt[u]:
                        flags[u] ^= 1
            if flags[root]:
                status = ODD_COMPONENT
                break

    for i in range(n2):
        v = tv2[i]
        parent2[v] = -1
        thead[v] = -1
        seen[v] = 0
        flags[v] = 0
    for i in range(nn):
        flags[nontriv[i]] = 0
    if status:
        return status
    return nout


@njit(cache=True, _nrt=False)
def _union_find(G, W, erase, ne, nontriv, nn, weighted):
    """Correction edges into ``W[OUT]``; returns their count or a status < 0."""
    if nn == 0:
        return 0
    status = _synd_val(G, W, erase, ne, nontriv, nn, weighted)
    if status:
        _reset(W)
        return status
    count = _peel(G, W, nontriv, nn)
    _reset(W)
    return count


@njit(cache=True, _nrt=False)
def _merge_erasures(erase, ne, edges, nedges, limit, buf):
    """``erase`` followed by the data edges among ``edges``, written to ``buf``."""
    k = 0
    for i in range(ne):
        buf[k] = erase[i]
        k += 1
    for i in range(nedges):
        if edges[i] < limit:
            buf[k] = edges[i]
            k += 1
    return k


@njit(cache=True, _nrt=False)
def _uf_into(G, W, erase, ne, nontriv, nn, weighted, out):
    count = _union_find(G, W, erase, ne, nontriv, nn, weighted)
    if count > 0:
        src = W[OUT]
        for i in range(count):
            out[i] = src[i]
    return count


@njit(cache=True, _nrt=False)
def _iruf_advance(GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, ncx, outz, steps):
    """Run ``steps`` more IRUF iterations from the current X correction.

    Returns ``(ncx, ncz, fixed)``; ``fixed`` is set once an iteration
    reproduces its input, after which further iterations change nothing.
    """
    limit = GX[META][0]
    prev = WZ[PREV]
    ncz = 0
    for _ in range(steps):
        _sort(outx, ncx)
        nprev = ncx
        for i in range(ncx):
            prev[i] = outx[i]
        k = _merge_erasures(erase, ne, outx, ncx, limit, WX[BUF])
        ncz = _uf_into(GX, WX, WX[BUF], k, sx, nsx, weighted, outz)
        if ncz < 0:
            return ncz, ncz, True
        k = _merge_erasures(erase, ne, outz, ncz, limit, WZ[BUF])
        ncx = _uf_into(GZ, WZ, WZ[BUF], k, sz, nsz, weighted, outx)
        if ncx < 0:
            return ncx, ncx, True
        if ncx == nprev:
            _sort(outx, ncx)
            same = True
            for i in range(ncx):
                if outx[i] != prev[i]:
                    same = False
                    break
            if same:
                return ncx, ncz, True
    return ncx, ncz, False


@njit(cache=True, _nrt=False)
def _uiuf(GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, outz, shared):
    """Returns ``(ncx, ncz, nshared)``; counts < 0 are statuses."""
    if nsx == 0 and nsz == 0:
        return 0, 0, 0
    status = _synd_val(GX, WX, erase, ne, sx, nsx, weighted)
    if status:
        _reset(WX)
        return status, status, 0
    status = _synd_val(GZ, WZ, erase, ne, sz, nsz, weighted)
    if status:
        _reset(WX)
        _reset(WZ)
        return status, status, 0
    limit = GX[META][0]
    supx, supz, te = WX[SUPPORT], WZ[SUPPORT], WX[TE]
    nshared = 0
    for i in range(WX[CNT][1]):
        e = te[i]
        if e < limit and supx[e] == 2 and supz[e] == 2:
            shared[nshared] = e
            nshared += 1
    _reset(WX)
    _reset(WZ)
    buf = WX[BUF]
    k = 0
    for i in range(ne):
        buf[k] = erase[i]
        k += 1
    for i in range(nshared):
        buf[k] = shared[i]
        k += 1
    ncx = _uf_into(GZ, WZ, buf, k, sz, nsz, weighted, outx)
    if ncx < 0:
        return ncx, ncx, nshared
    ncz = _uf_into(GX, WX, buf, k, sx, nsx, weighted, outz)
    if ncz < 0:
        return ncz, ncz, nshared
    return ncx, ncz, nshared


@njit(cache=True, _nrt=False)
def decode(alg, iter_max, weighted, GX, WX, GZ, WZ, erase, sx, sz, outx, outz, shared):
    """One decode.  Returns ``(ncx, ncz, nshared)``; negative counts are statuses.

    ``outx`` receives G_Z edges (X fixes), ``outz`` G_X edges (Z fixes).
    """
    ne, nsx, nsz = erase.shape[0], sx.shape[0], sz.shape[0]
    if alg == UIUF:
        return _uiuf(GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, outz, shared)
    ncx = _uf_into(GZ, WZ, erase, ne, sz, nsz, weighted, outx)
    if ncx < 0:
        return ncx, ncx, 0
    if alg == UF:
        ncz = _uf_into(GX, WX, erase, ne, sx, nsx, weighted, outz)
        return ncx, ncz, 0
    ncx, ncz, _ = _iruf_advance(
        GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, ncx, outz, iter_max
    )
    return ncx, ncz, 0


# -- trials ----------------------------------------------------------------


@njit(cache=True, _nrt=False)
def _check_match(G, out, nout, nontriv, nn, flags):
    """True iff the edges ``out`` have exactly ``nontriv`` as their syndrome."""
    eu, ev, virt = G[EU], G[EV], G[VIRT]
    for i in range(nout):
        e = out[i]
        if not virt[eu[e]]:
            flags[eu[e]] ^= 1
        if not virt[ev[e]]:
            flags[ev[e]] ^= 1
    ok = True
    for i in range(nn):
        if flags[nontriv[i]] != 1:
            ok = False
        flags[nontriv[i]] = 0
    for i in range(nout):
        e = out[i]
        if flags[eu[e]] or flags[ev[e]]:
            ok = False
        flags[eu[e]] = 0
        flags[ev[e]] = 0
    return ok


@njit(cache=True, _nrt=False)
def _toggle_edge(eu, ev, virt, e, flags):
    if not virt[eu[e]]:
        flags[eu[e]] ^= 1
    if not virt[ev[e]]:
        flags[ev[e]] ^= 1


@njit(cache=True, _nrt=False)
def _collect(G, edges, ne, flags, out):
    """Vertices left flagged by toggling ``edges``; clears ``flags``."""
    eu, ev = G[EU], G[EV]
    k = 0
    for i in range(ne):
        e = edges[i]
        for v in (eu[e], ev[e]):
            if flags[v]:
                out[k] = v
                k += 1
                flags[v] = 0
    return k


@njit(cache=True, _nrt=False)
def _odd_overlap(ptr, idx, j, bits):
    s = 0
    for k in range(ptr[j], ptr[j + 1]):
        s ^= bits[idx[k]]
    return s


@njit(cache=True, _nrt=False)
def _residual_clean(G, bits, n, flags, edges, out):
    """True iff the checks of ``G`` see no syndrome from the qubits set in ``bits``."""
    eu, ev, virt = G[EU], G[EV], G[VIRT]
    ne = 0
    for q in range(n):
        if bits[q]:
            edges[ne] = q
            ne += 1
            _toggle_edge(eu, ev, virt, q, flags)
    return _collect(G, edges, ne, flags, out) == 0


@njit(cache=True, _nrt=False)
def _judge(C, GX, WX, GZ, WZ, outx, ncx, outz, ncz, sx, nsx, sz, nsz, acc_x, acc_z, rx, rz):
    """0 = corrected, 1 = logical failure, < 0 = contract violation."""
    if ncx < 0:
        return ncx
    if ncz < 0:
        return ncz
    if not _check_match(GZ, outx, ncx, sz, nsz, WZ[FLAGS]):
        return SYNDROME_MISMATCH
    if not _check_match(GX, outz, ncz, sx, nsx, WX[FLAGS]):
        return SYNDROME_MISMATCH
    lx_ptr, lx_idx, lz_ptr, lz_idx = C[4], C[5], C[6], C[7]
    n = acc_x.shape[0]
    limit = GX[META][0]
    for q in range(acc_x.shape[0]):
        rx[q] = acc_x[q]
        rz[q] = acc_z[q]
    for i in range(ncx):
        if outx[i] < limit:
            rx[outx[i] % n] ^= 1
    for i in range(ncz):
        if outz[i] < limit:
            rz[outz[i] % n] ^= 1
    if not _residual_clean(GX, rz, n, WX[FLAGS], WX[FUS], WX[INV]):
        return RESIDUAL_SYNDROME
    if not _residual_clean(GZ, rx, n, WZ[FLAGS], WZ[FUS], WZ[INV]):
        return RESIDUAL_SYNDROME
    for j in range(lz_ptr.shape[0] - 1):
        if _odd_overlap(lz_ptr, lz_idx, j, rx):
            return 1
    for j in range(lx_ptr.shape[0] - 1):
        if _odd_overlap(lx_ptr, lx_idx, j, rz):
            return 1
    return 0


@njit(cache=True, _nrt=False)
def _extract(C, GX, WX, GZ, WZ, ex, ez, fx, fz, er, acc_x, acc_z, sx, sz, erase):
    """Syndrome differences and erased edges of one multi-round sample.

    ``ex``/``ez``/``er`` are ``(rounds, n)``, ``fx``/``fz`` ``(rounds, m)``.
    The difference between consecutive rounds is the syndrome of the data
    edges erred in that round plus the measurement edges whose outcome
    flipped, so it is computed as an edge syndrome on the layered graph.
    Fills the accumulated data error and returns ``(nsx, nsz, ne)``.
    """
    rounds, n = ex.shape
    mx, mz = fx.shape[1], fz.shape[1]
    data = GX[META][0]
    flags_x, flags_z, edges_x, edges_z = WX[FLAGS], WZ[FLAGS], WX[FUS], WZ[FUS]
    exu, exv, xvirt = GX[EU], GX[EV], GX[VIRT]
    ezu, ezv, zvirt = GZ[EU], GZ[EV], GZ[VIRT]
    acc_x[:] = 0
    acc_z[:] = 0
    nex = 0
    nez = 0
    ne = 0
    for layer in range(rounds):
        for q in range(n):
            e = layer * n + q
            if ex[layer, q]:
                acc_x[q] ^= 1
                edges_z[nez] = e
                nez += 1
                _toggle_edge(ezu, ezv, zvirt, e, flags_z)
            if ez[layer, q]:
                acc_z[q] ^= 1
                edges_x[nex] = e
                nex += 1
                _toggle_edge(exu, exv, xvirt, e, flags_x)
            if er[layer, q]:
                erase[ne] = e
                ne += 1
        if layer + 1 < rounds:
            for c in range(mx):
                if fx[layer, c]:
                    e = data + layer * mx + c
                    edges_x[nex] = e
                    nex += 1
                    _toggle_edge(exu, exv, xvirt, e, flags_x)
            for c in range(mz):
                if fz[layer, c]:
                    e = data + layer * mz + c
                    edges_z[nez] = e
                    nez += 1
                    _toggle_edge(ezu, ezv, zvirt, e, flags_z)
    nsx = _collect(GX, edges_x, nex, flags_x, sx)
    nsz = _collect(GZ, edges_z, nez, flags_z, sz)
    return nsx, nsz, ne


@njit(cache=True, _nrt=False)
def _trial(alg, ckpts, weighted, C, GX, WX, GZ, WZ, ex, ez, fx, fz, er, scratch, result):
    """Decode one sample; ``result[j]`` gets the outcome after ``ckpts[j]`` iterations.

    For UF and UIUF every checkpoint receives the same outcome.
    """
    acc_x, acc_z, rx, rz, sx, sz, erase, outx, outz, shared = scratch
    nsx, nsz, ne = _extract(C, GX, WX, GZ, WZ, ex, ez, fx, fz, er, acc_x, acc_z, sx, sz, erase)
    if alg == UIUF:
        ncx, ncz, _ = _uiuf(GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, outz, shared)
        result[:] = _judge(C, GX, WX, GZ, WZ, outx, ncx, outz, ncz, sx, nsx, sz, nsz, acc_x, acc_z, rx, rz)
        return
    ncx = _uf_into(GZ, WZ, erase, ne, sz, nsz, weighted, outx)
    if alg == UF:
        ncz = _uf_into(GX, WX, erase, ne, sx, nsx, weighted, outz)
        result[:] = _judge(C, GX, WX, GZ, WZ, outx, ncx, outz, ncz, sx, nsx, sz, nsz, acc_x, acc_z, rx, rz)
        return
    done = 0
    ncz = 0
    fixed = ncx < 0
    for j in range(ckpts.shape[0]):
        if not fixed:
            ncx, ncz, fixed = _iruf_advance(
                GX, WX, GZ, WZ, erase, ne, sx, nsx, sz, nsz, weighted, outx, ncx, outz, ckpts[j] - done
            )
            done = ckpts[j]
        result[j] = _judge(C, GX, WX, GZ, WZ, outx, ncx, outz, ncz, sx, nsx, sz, nsz, acc_x, acc_z, rx, rz)


def trial_scratch(code, graph_x, graph_z) -> tuple:
    n = code.n
    return (
        np.zeros(n, np.uint8), np.zeros(n, np.uint8), np.zeros(n, np.uint8), np.zeros(n, np.uint8),
        np.zeros(graph_x.n_vertices, np.int64), np.zeros(graph_z.n_vertices, np.int64),
        np.zeros(graph_x.n_data_edges, np.int64),
        np.zeros(graph_z.n_edges, np.int64), np.zeros(graph_x.n_edges, np.int64),
        np.zeros(graph_x.n_data_edges, np.int64),
    )


@njit(cache=True, _nrt=False)
def run_batch(alg, ckpts, weighted, C, GX, WX, GZ, WZ, EX, EZ, FX, FZ, ER, scratch, results):
    """Decode samples ``EX[i]`` ... and write outcomes to ``results[i]``."""
    for i in range(EX.shape[0]):
        _trial(alg, ckpts, weighted, C, GX, WX, GZ, WZ, EX[i], EZ[i], FX[i], FZ[i], ER[i], scratch, results[i])


@njit(cache=True, _nrt=False)
def _next_comb(c, n):
    """Advance ``c`` to the next ``len(c)``-subset of ``range(n)``; False at the end."""
    w = c.shape[0]
    i = w - 1
    while i >= 0 and c[i] == n - w + i:
        i -= 1
    if i < 0:
        return False
    c[i] += 1
    for j in range(i + 1, w):
        c[j] = c[j - 1] + 1
    return True


@njit(cache=True)
def enumerate_weight(alg, ckpts, weighted, C, GX, WX, GZ, WZ, w, first_lo, first_hi, scratch, counts):
    """All weight-``w`` Paulis whose lowest qubit lies in ``[first_lo, first_hi)``.

    ``counts[j]`` accumulates ``[decoded, failures, X-only, Z-only, Y-only,
    mixed]`` failure tallies for checkpoint ``j``; returns a status (0 or < 0).
    """
    n = GX[META][2]
    m_x = GX[META][4]
    m_z = GZ[META][4]
    ex = np.zeros((1, n), np.uint8)
    ez = np.zeros((1, n), np.uint8)
    er = np.zeros((1, n), np.uint8)
    fx = np.zeros((1, m_x), np.uint8)
    fz = np.zeros((1, m_z), np.uint8)
    result = np.zeros(ckpts.shape[0], np.int64)
    if w == 0 or first_lo >= first_hi or first_lo > n - w:
        return 0
    c = np.arange(first_lo, first_lo + w)
    types = np.zeros(w, np.int64)
    total_types = 3**w
    while c[0] < first_hi:
        for t in range(total_types):
            x = t
            nx = 0
            ny = 0
            nz = 0
            for j in range(w):
                types[j] = x % 3
                x //= 3
                q = c[j]
                # 0 = X, 1 = Y, 2 = Z
                ex[0, q] = 1 if types[j] < 2 else 0
                ez[0, q] = 1 if types[j] > 0 else 0
                if types[j] == 0:
                    nx += 1
                elif types[j] == 1:
                    ny += 1
                else:
                    nz += 1
            _trial(alg, ckpts, weighted, C, GX, WX, GZ, WZ, ex, ez, fx, fz, er, scratch, result)
            for j in range(ckpts.shape[0]):
                r = result[j]
                if r < 0:
                    return r
                counts[j, 0] += 1
                if r == 1:
                    counts[j, 1] += 1
                    if nx == w:
                        counts[j, 2] += 1
                    elif nz == w:
                        counts[j, 3] += 1
                    elif ny == w:
                        counts[j, 4] += 1
                    else:
                        counts[j, 5] += 1
        for j in range(w):
            ex[0, c[j]] = 0
            ez[0, c[j]] = 0
        if not _next_comb(c, n):
            break
    return 0


@njit(cache=True)
def enumerate_mixed(alg, iter_max, weighted, C, GX, WX, GZ, WZ, r, t, first_lo, first_hi, scratch, counts):
    """Every ``r``-erasure (all ``4**r`` erased Paulis) plus weight-``t`` Pauli elsewhere.

    Only erasure sets whose lowest qubit lies in ``[first_lo, first_hi)`` are
    visited.  ``counts`` accumulates ``[decoded, failures]``; returns a status.
    """
    n = GX[META][2]
    m_x = GX[META][4]
    m_z = GZ[META][4]
    ex = np.zeros((1, n), np.uint8)
    ez = np.zeros((1, n), np.uint8)
    er = np.zeros((1, n), np.uint8)
    fx = np.zeros((1, m_x), np.uint8)
    fz = np.zeros((1, m_z), np.uint8)
    result = np.zeros(1, np.int64)
    ckpts = np.full(1, iter_max, np.int64)
    if r == 0 or first_lo >= first_hi or first_lo > n - r:
        return 0
    free = np.zeros(n - r, np.int64)
    ec = np.arange(first_lo, first_lo + r)
    pc = np.arange(t)
    while ec[0] < first_hi:
        k = 0
        for q in range(n):
            er[0, q] = 0
        for j in range(r):
            er[0, ec[j]] = 1
        for q in range(n):
            if not er[0, q]:
                free[k] = q
                k += 1
        for pat in range(4**r):
            x = pat
            for j in range(r):
                ex[0, ec[j]] = x & 1
                ez[0, ec[j]] = (x >> 1) & 1
                x >>= 2
            for j in range(t):
                pc[j] = j
            more = True
            while more:
                for tt in range(3**t):
                    x = tt
                    for j in range(t):
                        q = free[pc[j]]
                        ex[0, q] = 1 if x % 3 < 2 else 0
                        ez[0, q] = 1 if x % 3 > 0 else 0
                        x //= 3
                    _trial(alg, ckpts, weighted, C, GX, WX, GZ, WZ, ex, ez, fx, fz, er, scratch, result)
                    if result[0] < 0:
                        return result[0]
                    counts[0] += 1
                    counts[1] += result[0]
                for j in range(t):
                    q = free[pc[j]]
                    ex[0, q] = 0
                    ez[0, q] = 0
                more = t > 0 and _next_comb(pc, n - r)
        for j in range(r):
            ex[0, ec[j]] = 0
            ez[0, ec[j]] = 0
        if not _next_comb(ec, n):
            break
    return 0


@njit(cache=True, _nrt=False)
def syndromes_batch(C, GX, WX, GZ, WZ, EX, EZ, FX, FZ, ER, scratch, sx_out, sz_out, er_out, sizes):
    """Vertex syndromes of a batch, padded rows; ``sizes[i] = (nsx, nsz, ne)``."""
    acc_x, acc_z, _, _, sx, sz, erase = scratch[:7]
    for i in range(EX.shape[0]):
        nsx, nsz, ne = _extract(C, GX, WX, GZ, WZ, EX[i], EZ[i], FX[i], FZ[i], ER[i], acc_x, acc_z, sx, sz, erase)
        for j in range(nsx):
            sx_out[i, j] = sx[j]
        for j in range(nsz):
            sz_out[i, j] = sz[j]
        for j in range(ne):
            er_out[i, j] = erase[j]
        sizes[i, 0] = nsx
        sizes[i, 1] = nsz
        sizes[i, 2] = ne


@njit(cache=True, _nrt=False)
def decode_batch(alg, iter_max, weighted, GX, WX, GZ, WZ, sx_in, sz_in, er_in, sizes, outx, outz, shared):
    """Decode precomputed syndromes only; used for timing."""
    bad = 0
    for i in range(sx_in.shape[0]):
        ncx, ncz, _ = decode(
            alg, iter_max, weighted, GX, WX, GZ, WZ,
            er_in[i, : sizes[i, 2]], sx_in[i, : sizes[i, 0]], sz_in[i, : sizes[i, 1]],
            outx, outz, shared,
        )
        if ncx < 0 or ncz < 0:
            bad += 1
    return bad


# -- Python-side owner of the buffers --------------------------------------


class ContractViolation(AssertionError):
    """A decoder produced a correction that does not match its syndrome."""


def raise_status(status: int) -> None:
    from .clusters import MalformedSyndromeError
    from .peeling import PeelingError

    message = STATUS_MESSAGES.get(int(status), f"kernel status {status}")
    if status == MALFORMED:
        raise MalformedSyndromeError(message)
    if status == VIRTUAL_SYNDROME:
        raise ValueError(message)
    if status in (STRAY_SYNDROME, ODD_COMPONENT):
        raise PeelingError(message)
    raise ContractViolation(message)


class Engine:
    """Compiled decoder bound to one code and its two decoding graphs.

    Holds preallocated buffers, so one instance serves one decode at a time.
    """

    def __init__(self, code, graph_x, graph_z, algorithm: int, iter_max: int = 1, weighted: bool = False):
        self.algorithm = int(algorithm)
        self.iter_max = int(iter_max)
        self.weighted = bool(weighted)
        self.n = code.n
        self.rounds = graph_x.rounds
        self.shape_x = (graph_x.rounds, graph_x.n_checks)
        self.shape_z = (graph_z.rounds, graph_z.n_checks)
        self.C = code_arrays(code)
        self.GX, self.GZ = graph_arrays(graph_x), graph_arrays(graph_z)
        self.WX, self.WZ = workspace(graph_x), workspace(graph_z)
        self.outx = np.zeros(graph_z.n_edges, np.int64)
        self.outz = np.zeros(graph_x.n_edges, np.int64)
        self.shared = np.zeros(graph_x.n_data_edges, np.int64)
        self.scratch = trial_scratch(code, graph_x, graph_z)

    def decode(self, sigma_x, sigma_z, erasures=()):
        """Vertex syndromes to ``(C_X edges, C_Z edges, shared edges)``."""
        sx = np.asarray(sorted(set(int(v) for v in sigma_x)), np.int64)
        sz = np.asarray(sorted(set(int(v) for v in sigma_z)), np.int64)
        er = np.asarray(sorted(set(int(e) for e in erasures)), np.int64)
        ncx, ncz, nsh = decode(
            self.algorithm, self.iter_max, self.weighted, self.GX, self.WX, self.GZ, self.WZ,
            er, sx, sz, self.outx, self.outz, self.shared,
        )
        for status in (ncx, ncz):
            if status < 0:
                raise_status(status)
        return (
            self.outx[:ncx].tolist(),
            self.outz[:ncz].tolist(),
            set(self.shared[:nsh].tolist()),
        )

    def run(self, EX, EZ, FX=None, FZ=None, ER=None, checkpoints=None) -> np.ndarray:
        """Outcomes (0 corrected, 1 logical failure) of a batch of samples.

        ``EX``/``EZ``/``ER`` have shape ``(batch, rounds, n)``; ``FX``/``FZ``
        ``(batch, rounds, m)``.  ``checkpoints`` lists IRUF iteration counts
        to evaluate in one pass (default ``[iter_max]``); the result has one
        column per checkpoint.
        """
        EX = np.ascontiguousarray(EX, np.uint8)
        EZ = np.ascontiguousarray(EZ, np.uint8)
        batch = EX.shape[0]
        if FX is None:
            FX = np.zeros((batch, *self.shape_x), np.uint8)
        if FZ is None:
            FZ = np.zeros((batch, *self.shape_z), np.uint8)
        if ER is None:
            ER = np.zeros_like(EX)
        ckpts = np.asarray(checkpoints if checkpoints is not None else [self.iter_max], np.int64)
        results = np.zeros((batch, len(ckpts)), np.int64)
        run_batch(
            self.algorithm, ckpts, self.weighted, self.C, self.GX, self.WX, self.GZ, self.WZ,
            EX, EZ, np.ascontiguousarray(FX, np.uint8), np.ascontiguousarray(FZ, np.uint8),
            np.ascontiguousarray(ER, np.uint8), self.scratch, results,
        )
        bad = results[results < 0]
        if bad.size:
            raise_status(int(bad[0]))
        return results
