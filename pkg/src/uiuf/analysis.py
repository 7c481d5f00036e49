"""Exhaustive enumeration, weight enumerators, threshold fits and timing.

Enumeration walks every weight-``w`` Pauli in lexicographic order of its
support (and base-3 order of the X/Y/Z labels), decodes it with no erasures
and counts logical failures.  The index space is split into blocks by the
lowest qubit of the support; blocks reduce to partial counters, so totals do
not depend on the block layout or the number of workers.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from . import _kernels
from ._validation import check_positive_int, check_probability
from .codes import CodeSpec, TopologicalCode, build_code
from .decoders import Algorithm, UnionFindDecoder
from .noise import NoiseParams, sample_batch

RESULT_COLUMNS = ("family", "d", "epsilon", "decoder", "wg", "trials", "failures", "p_L", "stderr")


class BudgetExceeded(ValueError):
    """An exhaustive enumeration larger than the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} decodes, budget is {budget}")
        self.required = required
        self.budget = budget


def pauli_count(n: int, w: int) -> int:
    """Number of weight-``w`` Paulis on ``n`` qubits."""
    return math.comb(n, w) * 3**w


def mixed_count(n: int, r: int, t: int) -> int:
    """Number of (``r`` erasures with any Paulis, weight-``t`` Pauli elsewhere) cases."""
    return math.comb(n, r) * 4**r * math.comb(n - r, t) * 3**t


def _fitted(code, decoder) -> UnionFindDecoder:
    if not isinstance(code, TopologicalCode):
        code = build_code(code) if isinstance(code, CodeSpec) else build_code(*code)
    decoder = UnionFindDecoder() if decoder is None else decoder
    if getattr(decoder, "code_", None) is not code or getattr(decoder, "engine_", None) is None:
        params = decoder.get_params()
        params.update(engine="compiled", rounds=1)
        decoder = UnionFindDecoder(**params).fit(code)
    return decoder


def _blocks(n: int, w: int, n_blocks: int) -> list[tuple[int, int]]:
    """Split first-qubit values into ranges of roughly equal work."""
    last = n - w + 1
    weights = [math.comb(n - 1 - i, w - 1) for i in range(last)]
    total = sum(weights)
    bounds = [0]
    acc = 0
    for i, wt in enumerate(weights):
        acc += wt
        if acc * n_blocks >= total * len(bounds) and i + 1 < last:
            bounds.append(i + 1)
    bounds.append(last)
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if a < b]


def _weight_block(params: dict, family: str, d: int, w: int, ckpts: tuple, lo: int, hi: int) -> np.ndarray:
    dec = UnionFindDecoder(**params).fit(build_code(family, d))
    e = dec.engine_
    counts = np.zeros((len(ckpts), 6), np.int64)
    status = _kernels.enumerate_weight(
        e.algorithm, np.asarray(ckpts, np.int64), e.weighted, e.C, e.GX, e.WX, e.GZ, e.WZ,
        w, lo, hi, e.scratch, counts,
    )
    if status < 0:
        _kernels.raise_status(status)
    return counts


@dataclass
class EnumerationResult:
    """Failure counts of one exhaustive weight-``w`` enumeration."""

    family: str
    d: int
    n: int
    algorithm: str
    weighted_growth: bool
    iter_max: int
    weight: int
    total: int
    failures: int
    by_type: dict[str, int]

    def to_dict(self) -> dict:
        return asdict(self)


def enumerate_undecodable(
    code,
    decoder: UnionFindDecoder | None = None,
    weight: int = 1,
    *,
    budget: int = 10**8,
    iter_values: Sequence[int] | None = None,
    workers: int = 1,
    blocks: int | None = None,
):
    """Count weight-``weight`` Paulis that ``decoder`` fails to correct.

    ``by_type`` splits failures into ``X``, ``Z`` and ``Y`` (every non-identity
    factor of that letter) and ``mixed``.  For IRUF, ``iter_values`` evaluates
    several iteration limits in one pass and a list of results is returned.
    Raises :class:`BudgetExceeded` when the enumeration is larger than
    ``budget``.
    """
    dec = _fitted(code, decoder)
    code = dec.code_
    check_positive_int(weight, "weight")
    required = pauli_count(code.n, weight)
    if required > budget:
        raise BudgetExceeded(required, budget)
    single = iter_values is None
    ckpts = tuple(sorted({int(v) for v in (iter_values or [dec.iter_max])}))
    if dec.algorithm_ is not Algorithm.IRUF:
        ckpts = ckpts[:1]
    params = dec.get_params()
    args = (params, code.spec.family.value, code.d, weight, ckpts)
    parts = _blocks(code.n, weight, blocks or workers)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            partial = list(pool.map(_weight_block, *zip(*[args + part for part in parts])))
    else:
        partial = [_weight_block(*args, *part) for part in parts]
    counts = np.sum(partial, axis=0)
    results = []
    for k, it in zip(counts, ckpts):
        results.append(
            EnumerationResult(
                family=code.spec.family.value,
                d=code.d,
                n=code.n,
                algorithm=dec.algorithm_.value,
                weighted_growth=bool(dec.weighted_growth),
                iter_max=int(it),
                weight=weight,
                total=int(k[0]),
                failures=int(k[1]),
                by_type={"X": int(k[2]), "Z": int(k[3]), "Y": int(k[4]), "mixed": int(k[5])},
            )
        )
    return results[0] if single else results


@dataclass
class MixedResult:
    """Outcome of an erasure-plus-Pauli sweep."""

    r: int
    t: int
    cases: int
    failures: int
    exhaustive: bool


def enumerate_mixed(
    code,
    decoder: UnionFindDecoder | None = None,
    r: int = 1,
    t: int = 0,
    *,
    budget: int = 10**7,
    samples: int = 10**6,
    seed: int = 0,
    chunk: int = 20_000,
) -> MixedResult:
    """Decode ``r`` erasures (any Paulis on them) plus a weight-``t`` Pauli elsewhere.

    Every case is visited when there are at most ``budget`` of them;
    otherwise ``samples`` cases are drawn uniformly at random.
    """
    dec = _fitted(code, decoder)
    code, e = dec.code_, dec.engine_
    n = code.n
    if r < 0 or t < 0 or r + t > n:
        raise ValueError(f"need 0 <= r, t and r + t <= n, got r={r}, t={t}")
    total = mixed_count(n, r, t)
    if r == 0:
        res = enumerate_undecodable(code, dec, t, budget=max(budget, pauli_count(n, t))) if t else None
        return MixedResult(0, t, res.total if res else 1, res.failures if res else 0, True)
    if total <= budget:
        counts = np.zeros(2, np.int64)
        status = _kernels.enumerate_mixed(
            e.algorithm, e.iter_max, e.weighted, e.C, e.GX, e.WX, e.GZ, e.WZ, r, t, 0, n, e.scratch, counts
        )
        if status < 0:
            _kernels.raise_status(status)
        return MixedResult(r, t, int(counts[0]), int(counts[1]), True)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 7], np.uint64)))
    failures = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        order = np.argsort(rng.random((m, n)), axis=1)
        rows = np.arange(m)[:, None]
        er = np.zeros((m, 1, n), np.uint8)
        ex = np.zeros((m, 1, n), np.uint8)
        ez = np.zeros((m, 1, n), np.uint8)
        erased = order[:, :r]
        kind = rng.integers(0, 4, (m, r)).astype(np.uint8)
        er[rows, 0, erased] = 1
        ex[rows, 0, erased] = kind & 1
        ez[rows, 0, erased] = kind >> 1
        if t:
            hit = order[:, r : r + t]
            kind = rng.integers(1, 4, (m, t)).astype(np.uint8)
            ex[rows, 0, hit] = kind & 1
            ez[rows, 0, hit] = kind >> 1
        failures += int(e.run(ex, ez, ER=er).sum())
        done += m
    return MixedResult(r, t, samples, failures, False)


# -- weight enumerator ----------------------------------------------------


@dataclass
class WeightEnumerator:
    """Undecodable-error counts ``a[i]`` for weights ``1..w_max``."""

    n: int
    a: dict[int, int] = field(default_factory=dict)

    @property
    def w_max(self) -> int:
        return max(self.a, default=0)

    def __post_init__(self):
        for i, ai in self.a.items():
            if not 0 <= ai <= pauli_count(self.n, i):
                raise ValueError(f"a[{i}] = {ai} outside [0, C(n,i) 3^i]")

    def polynomial(self, x: float, y: float) -> float:
        """``sum_i a_i x**i y**(n - i)`` over the enumerated weights."""
        return float(sum(ai * x**i * y ** (self.n - i) for i, ai in self.a.items()))

    def to_dict(self) -> dict:
        return {"n": self.n, "w_max": self.w_max, "a": {str(i): ai for i, ai in sorted(self.a.items())}}


def weight_enumerator(code, decoder=None, w_max: int = 3, budget: int = 10**8) -> WeightEnumerator:
    dec = _fitted(code, decoder)
    a = {w: enumerate_undecodable(dec.code_, dec, w, budget=budget).failures for w in range(1, w_max + 1)}
    return WeightEnumerator(dec.code_.n, a)


def logical_error_rate(enumerator: WeightEnumerator, epsilon: float) -> float:
    """Depolarizing logical error rate truncated at ``enumerator.w_max``.

    Each weight-``i`` Pauli occurs with probability ``(eps/3)**i (1-eps)**(n-i)``,
    so the sum is a lower bound that is tight when ``eps`` is small.
    """
    epsilon = check_probability(epsilon, "epsilon")
    return enumerator.polynomial(epsilon / 3.0, 1.0 - epsilon)


# -- threshold fit ----------------------------------------------------------


@dataclass
class ScalingFit:
    nu: float
    tau: float
    poly_coeffs: list[float]
    poly_degree: int
    residual: float
    baseline: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


class ThresholdFitError(ValueError):
    """Data that does not determine a threshold."""


def _wls_grid(x: np.ndarray, y: np.ndarray, w: np.ndarray, degree: int):
    """Weighted polynomial fits for each row of ``x`` (shape ``(K, N)``).

    Returns coefficients ``(K, degree + 1)`` (increasing powers) and the
    weighted residual sum of squares ``(K,)``.
    """
    V = x[..., None] ** np.arange(degree + 1)
    Vw = V * w[None, :, None]
    A = np.einsum("kni,knj->kij", Vw, V)
    b = np.einsum("kni,n->ki", Vw, y)
    coef = np.linalg.solve(A, b[..., None])[..., 0]
    pred = np.einsum("kni,ki->kn", V, coef)
    resid = ((y - pred) ** 2 * w).sum(axis=1)
    return coef, resid


class ThresholdFit(RegressorMixin, BaseEstimator):
    """Critical-scaling fit ``p_L = f(d**(1/nu) * (eps - tau))`` with polynomial ``f``.

    ``(nu, tau)`` is found by exhaustive search: ``nu`` over ``nu_range``
    in steps of ``nu_step``, ``tau`` over the sampled epsilon range in steps of
    ``tau_step``.  Each candidate fits ``f`` by weighted least squares with
    weights ``1 / stderr**2``.

    Parameters
    ----------
    poly_degree : int
        Degree of ``f``; 2 suits code-capacity data, 4 phenomenological data.
    nu_range : tuple of float
    nu_step, tau_step : float
    min_distances, min_points_per_distance : int
        Input requirements; fewer is rejected.

    Attributes
    ----------
    nu_, tau_ : float
    coef_ : ndarray
        Coefficients of ``f`` in increasing powers.
    residual_ : float
        Weighted residual sum of squares at the optimum.
    baseline_ : float
        Residual of a degree-``poly_degree`` fit in ``eps`` alone (ignoring
        ``d``); a fit that cannot beat it is rejected.
    """

    def __init__(
        self,
        poly_degree=2,
        nu_range=(0.5, 2.0),
        nu_step=0.01,
        tau_step=1e-4,
        min_distances=3,
        min_points_per_distance=4,
    ):
        self.poly_degree = poly_degree
        self.nu_range = nu_range
        self.nu_step = nu_step
        self.tau_step = tau_step
        self.min_distances = min_distances
        self.min_points_per_distance = min_points_per_distance

    def fit(self, X, y, stderr=None):
        """``X`` has columns ``(d, epsilon)``, ``y`` is ``p_L``."""
        X = check_array(X, dtype=float)
        y = np.asarray(y, float).ravel()
        check_consistent_length(X, y)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: d and epsilon")
        degree = check_positive_int(self.poly_degree, "poly_degree")
        d, eps = X[:, 0], X[:, 1]
        dists, per = np.unique(d, return_counts=True)
        if len(dists) < self.min_distances:
            raise ThresholdFitError(f"need at least {self.min_distances} distances, got {len(dists)}")
        if per.min() < self.min_points_per_distance:
            raise ThresholdFitError(
                f"need at least {self.min_points_per_distance} epsilon points per distance, got {per.min()}"
            )
        if stderr is None:
            stderr = np.ones_like(y)
        stderr = np.asarray(stderr, float).ravel()
        check_consistent_length(y, stderr)
        positive = stderr[stderr > 0]
        if not positive.size:
            raise ThresholdFitError("all standard errors are zero")
        w = 1.0 / np.maximum(stderr, positive.min()) ** 2

        _, base = _wls_grid(eps[None, :], y, w, degree)
        self.baseline_ = float(base[0])

        lo, hi = eps.min(), eps.max()
        taus = lo + self.tau_step * np.arange(int(round((hi - lo) / self.tau_step)) + 1)
        nus = np.arange(self.nu_range[0], self.nu_range[1] + self.nu_step / 2, self.nu_step)
        best = (np.inf, None, None, None)
        for nu in nus:
            x = d[None, :] ** (1.0 / nu) * (eps[None, :] - taus[:, None])
            coef, resid = _wls_grid(x, y, w, degree)
            k = int(np.argmin(resid))
            if resid[k] < best[0]:
                best = (float(resid[k]), float(nu), float(taus[k]), coef[k])
        resid, nu, tau, coef = best
        if not resid < self.baseline_:
            raise ThresholdFitError(
                f"no crossing: best scaling residual {resid:.4g} does not beat the "
                f"d-independent baseline {self.baseline_:.4g}"
            )
        if np.isclose(tau, taus[0]) or np.isclose(tau, taus[-1]):
            raise ThresholdFitError(f"best tau {tau:.4%} lies on the edge of the sampled range")
        self.nu_, self.tau_, self.coef_, self.residual_ = nu, tau, coef, resid
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "tau_")
        X = check_array(X, dtype=float)
        x = X[:, 0] ** (1.0 / self.nu_) * (X[:, 1] - self.tau_)
        return np.polynomial.polynomial.polyval(x, self.coef_)

    def result(self) -> ScalingFit:
        check_is_fitted(self, "tau_")
        return ScalingFit(
            nu=self.nu_,
            tau=self.tau_,
            poly_coeffs=[float(c) for c in self.coef_],
            poly_degree=int(self.poly_degree),
            residual=self.residual_,
            baseline=self.baseline_,
            n_points=None if not hasattr(self, "n_points_") else self.n_points_,
        )


def fit_threshold(samples: Iterable, poly_degree: int = 2, **kwargs) -> ScalingFit:
    """Fit ``(d, epsilon, p_L, stderr)`` tuples or result rows."""
    rows = [
        (s["d"], s["epsilon"], s["p_L"], s["stderr"]) if isinstance(s, dict) else tuple(s)
        for s in samples
    ]
    if not rows:
        raise ThresholdFitError("no samples")
    arr = np.asarray(rows, float)
    est = ThresholdFit(poly_degree=poly_degree, **kwargs).fit(arr[:, :2], arr[:, 2], arr[:, 3])
    est.n_points_ = len(arr)
    return est.result()


# -- timing -----------------------------------------------------------------


@dataclass
class BenchmarkResult:
    family: str
    d: int
    n: int
    algorithm: str
    weighted_growth: bool
    rounds: int
    epsilon: float
    trials: int
    mean_time: float
    total_time: float
    measurements: int = 0

    @property
    def variables(self) -> int:
        """Error mechanisms per shot: data qubits times rounds plus noisy measurements."""
        return self.n * self.rounds + self.measurements


def benchmark_decode(
    code,
    decoder: UnionFindDecoder | None = None,
    epsilon: float = 0.05,
    trials: int = 10**5,
    seed: int = 0,
    chunk: int = 10_000,
) -> BenchmarkResult:
    """Mean wall-clock time of one decode, syndrome extraction excluded.

    With a multi-round decoder the noise is phenomenological with
    measurement flips at rate ``epsilon``.
    """
    check_positive_int(trials, "trials")
    if not isinstance(code, TopologicalCode):
        code = build_code(code) if isinstance(code, CodeSpec) else build_code(*code)
    dec = UnionFindDecoder() if decoder is None else decoder
    if getattr(dec, "code_", None) is not code or getattr(dec, "engine_", None) is None:
        dec = UnionFindDecoder(**{**dec.get_params(), "engine": "compiled"}).fit(code)
    e = dec.engine_
    noise = NoiseParams(epsilon=epsilon, rounds=dec.rounds)
    gx, gz = dec.graph_x_, dec.graph_z_
    spent = 0.0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        s = sample_batch(noise, code, seed, done, m)
        sx = np.zeros((m, gx.n_vertices), np.int64)
        sz = np.zeros((m, gz.n_vertices), np.int64)
        er = np.zeros((m, gx.n_data_edges), np.int64)
        sizes = np.zeros((m, 3), np.int64)
        _kernels.syndromes_batch(
            e.C, e.GX, e.WX, e.GZ, e.WZ, s.x, s.z, s.flips_x, s.flips_z, s.erased,
            e.scratch, sx, sz, er, sizes,
        )
        t0 = time.perf_counter()
        bad = _kernels.decode_batch(
            e.algorithm, e.iter_max, e.weighted, e.GX, e.WX, e.GZ, e.WZ,
            sx, sz, er, sizes, e.outx, e.outz, e.shared,
        )
        spent += time.perf_counter() - t0
        if bad:
            raise _kernels.ContractViolation(f"{bad} decodes failed during benchmarking")
        done += m
    return BenchmarkResult(
        family=code.spec.family.value,
        d=code.d,
        n=code.n,
        algorithm=dec.algorithm_.value,
        weighted_growth=bool(dec.weighted_growth),
        rounds=dec.rounds,
        epsilon=epsilon,
        trials=trials,
        mean_time=spent / trials,
        total_time=spent,
        measurements=(gx.n_checks + gz.n_checks) * (dec.rounds - 1),
    )


def linear_scaling(sizes: Sequence[float], times: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(size, time)``: ``(slope, intercept, R^2)``."""
    x = np.asarray(sizes, float)
    y = np.asarray(times, float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(((y - (slope * x + intercept)) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return float(slope), float(intercept), 1.0 - ss_res / ss_tot if ss_tot else 1.0


# -- result files ---------------------------------------------------------


def write_table(rows: Sequence[dict], path: str | Path) -> None:
    """Write rows as CSV (``.csv``) or a JSON list (anything else).

    CSV columns start with those of :data:`RESULT_COLUMNS` that occur in the
    rows, followed by the remaining keys in first-seen order.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        keys = list(dict.fromkeys(k for row in rows for k in row))
        columns = [c for c in RESULT_COLUMNS if c in keys] + [k for k in keys if k not in RESULT_COLUMNS]
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, restval="")
            writer.writeheader()
            writer.writerows(rows)
    else:
        path.write_text(json.dumps(list(rows), indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def read_table(path: str | Path) -> list[dict]:
    """Inverse of :func:`write_table`; CSV numbers are converted back."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        return json.loads(path.read_text())
    rows = []
    with path.open(newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append({k: _parse_cell(v) for k, v in raw.items()})
    return rows


def _parse_cell(value: str):
    if value in ("True", "False"):
        return value == "True"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value
