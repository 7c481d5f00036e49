import itertools

import numpy as np
import pytest
from sklearn.base import clone

from uiuf.codes import CheckBasis, PauliOp, build_code, compute_syndrome, edge_syndrome, is_logical_failure
from uiuf.decoders import UnionFindDecoder, decode_spacetime, iruf_iterations, union_find
from uiuf._kernels import ContractViolation

from conftest import random_pauli, syndromes

TORIC6 = build_code("toric", 6)


def _residual(code, decoder, error, erasures=()):
    sx, sz = syndromes(code, error)
    return decoder.decode(sx, sz, erasures).pauli() * error


def _all_weight(code, w):
    for support in itertools.combinations(range(code.n), w):
        for kinds in itertools.product((1, 2, 3), repeat=w):
            x = np.zeros(code.n, np.uint8)
            z = np.zeros(code.n, np.uint8)
            for q, k in zip(support, kinds):
                x[q], z[q] = k & 1, k >> 1
            yield PauliOp(x, z)


@pytest.mark.parametrize("algorithm", ["uf", "iruf", "uiuf"])
def test_zero_syndrome_gives_empty_correction(algorithm):
    dec = UnionFindDecoder(algorithm).fit(TORIC6)
    m = len(TORIC6.x_stabilizers)
    corr = dec.decode(np.zeros(m, np.uint8), np.zeros(m, np.uint8))
    assert corr.pauli().weight == 0 and corr.erased == set()


def test_correlated_witness_uf_fails_uiuf_corrects():
    error = PauliOp.from_sparse(TORIC6.n, y=[28], z=[52, 64])
    assert error.weight == TORIC6.t + 1
    uf = UnionFindDecoder("uf").fit(TORIC6)
    ui = UnionFindDecoder("uiuf").fit(TORIC6)
    assert is_logical_failure(TORIC6, _residual(TORIC6, uf, error))
    sx, sz = syndromes(TORIC6, error)
    corr = ui.decode(sx, sz)
    assert 28 in corr.erased
    assert not is_logical_failure(TORIC6, corr.pauli() * error)


@pytest.mark.parametrize("family,d", [("toric", 4), ("rotated_surface", 5)])
@pytest.mark.parametrize("algorithm", ["uf", "uiuf"])
def test_corrects_every_pauli_up_to_half_distance(family, d, algorithm):
    code = build_code(family, d)
    dec = UnionFindDecoder(algorithm).fit(code)
    for w in range(1, code.t + 1):
        for error in _all_weight(code, w):
            assert not is_logical_failure(code, _residual(code, dec, error))


def test_uiuf_fails_less_often_than_uf_at_weight_three():
    code = build_code("toric", 6)
    rng = np.random.default_rng(2)
    fails = {}
    for alg in ("uf", "uiuf"):
        dec = UnionFindDecoder(alg).fit(code)
        rng = np.random.default_rng(2)
        count = 0
        for _ in range(3000):
            support = rng.choice(code.n, 3, replace=False)
            kinds = rng.integers(1, 4, 3)
            x = np.zeros(code.n, np.uint8)
            z = np.zeros(code.n, np.uint8)
            x[support], z[support] = kinds & 1, kinds >> 1
            count += is_logical_failure(code, _residual(code, dec, PauliOp(x, z)))
        fails[alg] = count
    assert fails["uiuf"] < fails["uf"]


def test_iruf_has_no_half_distance_guarantee():
    """Unlike UF and UIUF, IRUF leaves some weight-t errors uncorrected."""
    code = build_code("rotated_surface", 5)
    dec = UnionFindDecoder("iruf", iter_max=1).fit(code)
    failures = sum(is_logical_failure(code, _residual(code, dec, e)) for e in _all_weight(code, code.t))
    assert failures > 0


def test_iruf_shortcut_matches_full_recomputation():
    code = build_code("rotated_toric", 6)
    dec = UnionFindDecoder("uf").fit(code)
    gx, gz = dec.graph_x_, dec.graph_z_
    rng = np.random.default_rng(7)
    for _ in range(50):
        error = random_pauli(rng, code.n, 0.12)
        sx, sz = (np.flatnonzero(s) for s in syndromes(code, error))
        steps = list(iruf_iterations(gx, gz, (), sx, sz, 6))
        cx = union_find(gz, set(), sz)
        for got_x, got_z in steps:
            cz = union_find(gx, set(cx), sx)
            cx = union_find(gz, set(cz), sz)
            assert sorted(got_x) == sorted(cx) and sorted(got_z) == sorted(cz)


@pytest.mark.parametrize("algorithm", ["uf", "iruf", "uiuf"])
@pytest.mark.parametrize("weighted", [False, True])
def test_correction_always_matches_syndrome(algorithm, weighted):
    code = build_code("surface", 5)
    dec = UnionFindDecoder(algorithm, weighted, iter_max=3).fit(code)
    rng = np.random.default_rng(11)
    for _ in range(200):
        error = random_pauli(rng, code.n, 0.15)
        erased = np.flatnonzero(rng.random(code.n) < 0.05).tolist()
        sx, sz = syndromes(code, error)
        fix = dec.decode(sx, sz, erased).pauli()
        assert np.array_equal(compute_syndrome(code, fix, CheckBasis.X), sx)
        assert np.array_equal(compute_syndrome(code, fix, CheckBasis.Z), sz)


CASES = [("toric", 4, 1), ("rotated_toric", 6, 1), ("surface", 5, 1), ("rotated_surface", 5, 1),
         ("toric", 4, 5), ("rotated_surface", 3, 4), ("surface", 4, 3)]


@pytest.mark.parametrize("family,d,rounds", CASES)
@pytest.mark.parametrize("algorithm", ["uf", "iruf", "uiuf"])
def test_compiled_engine_matches_reference(family, d, rounds, algorithm):
    code = build_code(family, d)
    rng = np.random.default_rng(d * 10 + rounds)
    for wg in (False, True):
        ref = UnionFindDecoder(algorithm, wg, iter_max=3, rounds=rounds, engine="reference").fit(code)
        fast = UnionFindDecoder(algorithm, wg, iter_max=3, rounds=rounds).fit(code)
        gx, gz = ref.graph_x_, ref.graph_z_
        for _ in range(60):
            p = rng.uniform(0.02, 0.25)
            ex = np.flatnonzero(rng.random(gz.n_edges) < p)
            ez = np.flatnonzero(rng.random(gx.n_edges) < p)
            er = np.flatnonzero(rng.random(gx.n_data_edges) < p / 2).tolist()
            sx, sz = sorted(edge_syndrome(gx, ez)), sorted(edge_syndrome(gz, ex))
            a = ref.decode_edges(sx, sz, er)
            b = fast.decode_edges(sx, sz, er)
            assert sorted(a[0]) == sorted(b[0]) and sorted(a[1]) == sorted(b[1]) and a[2] == set(b[2])


def test_engine_batch_agrees_with_single_decodes():
    code = build_code("toric", 6)
    dec = UnionFindDecoder("uiuf").fit(code)
    rng = np.random.default_rng(4)
    errors = [random_pauli(rng, code.n, 0.1) for _ in range(300)]
    EX = np.array([e.x for e in errors])[:, None, :]
    EZ = np.array([e.z for e in errors])[:, None, :]
    outcomes = dec.engine_.run(EX, EZ)
    expected = [is_logical_failure(code, _residual(code, dec, e)) for e in errors]
    assert outcomes.ravel().astype(bool).tolist() == expected


def test_measurement_flip_is_explained_as_measurement_error():
    code = build_code("rotated_surface", 3)
    rounds = 3
    dec = UnionFindDecoder("uf", rounds=rounds).fit(code)
    mx, mz = len(code.x_stabilizers), len(code.z_stabilizers)
    diff_x = np.zeros((rounds, mx), np.uint8)
    diff_x[0, 1] = diff_x[1, 1] = 1
    corr = dec.decode_spacetime(diff_x, np.zeros((rounds, mz), np.uint8))
    assert corr.pauli().weight == 0
    assert corr.meas_fix_x == [{1}, set()]


def test_single_data_error_in_middle_round():
    code = build_code("rotated_surface", 3)
    rounds = 3
    dec = UnionFindDecoder("uf", rounds=rounds).fit(code)
    error = PauliOp.from_sparse(code.n, z=[4])
    sx = compute_syndrome(code, error, CheckBasis.X)
    diff_x = np.zeros((rounds, len(sx)), np.uint8)
    diff_x[1] = sx
    corr = decode_spacetime(dec, diff_x, np.zeros((rounds, len(code.z_stabilizers)), np.uint8))
    assert corr.z_fix[1] == {4} and not corr.z_fix[0] and not corr.z_fix[2]
    assert all(not s for s in corr.meas_fix_x)


def test_spacetime_erasure_pairs():
    code = build_code("toric", 4)
    rounds = 2
    dec = UnionFindDecoder("uiuf", rounds=rounds).fit(code)
    error = PauliOp.from_sparse(code.n, x=[5])
    sz = compute_syndrome(code, error, CheckBasis.Z)
    diff_z = np.zeros((rounds, len(sz)), np.uint8)
    diff_z[1] = sz
    corr = dec.decode_spacetime(np.zeros((rounds, len(code.x_stabilizers)), np.uint8), diff_z, [(5, 1)])
    assert corr.x_fix == [set(), {5}]


def test_sklearn_protocol():
    dec = UnionFindDecoder("iruf", weighted_growth=True, iter_max=4)
    assert dec.get_params() == {
        "algorithm": "iruf", "weighted_growth": True, "iter_max": 4, "rounds": 1, "engine": "compiled",
    }
    twin = clone(dec).set_params(algorithm="uiuf")
    assert twin.algorithm == "uiuf" and dec.algorithm == "iruf"
    assert "UnionFindDecoder" in repr(dec)


def test_predict_returns_syndrome_matching_corrections():
    code = build_code("rotated_surface", 5)
    dec = UnionFindDecoder("uiuf").fit(("rotated_surface", 5))
    rng = np.random.default_rng(0)
    errors = [random_pauli(rng, code.n, 0.1) for _ in range(40)]
    X = np.array([np.concatenate(syndromes(code, e)) for e in errors])
    out = dec.predict(X)
    assert out.shape == (40, 2 * code.n)
    for row, e in zip(out, errors):
        fix = PauliOp(row[: code.n], row[code.n:])
        assert np.array_equal(np.concatenate(syndromes(code, fix)), np.concatenate(syndromes(code, e)))


@pytest.mark.parametrize(
    "params", [dict(algorithm="mwpm"), dict(iter_max=0), dict(rounds=0), dict(engine="gpu")]
)
def test_invalid_parameters_rejected_at_fit(params):
    with pytest.raises(ValueError):
        UnionFindDecoder(**params).fit(TORIC6)


def test_unfitted_and_malformed_inputs():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        UnionFindDecoder().decode([0], [0])
    dec = UnionFindDecoder().fit(TORIC6)
    with pytest.raises(ValueError):
        dec.decode(np.zeros(3, np.uint8), np.zeros(18, np.uint8))
    with pytest.raises(ValueError):
        dec.decode(np.full(18, 2, np.uint8), np.zeros(18, np.uint8))
    with pytest.raises(ValueError):
        dec.predict(np.zeros((2, 5), np.uint8))
    with pytest.raises(ValueError, match="single-round"):
        UnionFindDecoder(rounds=2).fit(TORIC6).decode(np.zeros(18), np.zeros(18))


def test_odd_syndrome_on_closed_code_violates_contract():
    dec = UnionFindDecoder("uf").fit(TORIC6)
    sx = np.zeros(18, np.uint8)
    sx[0] = 1
    with pytest.raises((ContractViolation, ValueError)):
        dec.decode(sx, np.zeros(18, np.uint8))


def test_trace_reports_every_stage():
    error = PauliOp.from_sparse(TORIC6.n, y=[28], z=[52, 64])
    sx, sz = syndromes(TORIC6, error)
    snaps = []
    corr = UnionFindDecoder("uiuf").fit(TORIC6).decode(sx, sz, trace=snaps.append)
    stages = [s["stage"] for s in snaps]
    assert stages[0] == "union" and "intersection" in stages and stages[-1] == "final"
    inter = next(s for s in snaps if s["stage"] == "intersection")
    assert set(inter["shared_edges"]) == corr.erased
    assert {s["graph"] for s in snaps if "graph" in s} == {"G_X", "G_Z"}
    snaps.clear()
    UnionFindDecoder("iruf", iter_max=2).fit(TORIC6).decode(sx, sz, trace=snaps.append)
    assert {s["stage"] for s in snaps} >= {"initial", "iteration 1"}
