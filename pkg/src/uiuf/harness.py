"""Monte Carlo driver: adaptive stopping, sweeps and a resumable journal.

Trials are processed in fixed batches (10^4 by default); trial ``t`` always
uses the noise drawn for ``(seed, t)`` and the stopping rule is evaluated at
batch boundaries in batch order, so the outcome does not depend on how many
worker processes run the batches.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._validation import check_positive_int
from .codes import CodeSpec, build_code
from .decoders import UnionFindDecoder
from .noise import NoiseParams, sample_batch

CODE_CAPACITY = "code_capacity"
PHENOMENOLOGICAL = "phenomenological"

#: (lower bound on p_L, failures required) from the highest regime down.
DEFAULT_TARGETS = ((1e-4, 10_000), (1e-6, 800), (0.0, 200))


class InvalidPlan(ValueError):
    """A run plan whose settings contradict each other."""


@dataclass(frozen=True)
class StopRule:
    """When to stop sampling.

    With ``fixed_trials`` exactly that many trials run.  Otherwise sampling
    continues until the failure count reaches the target of the regime the
    running estimate falls in, or ``max_trials`` is exhausted.  Moving to a
    regime with a smaller target requires the estimate to sit ``margin``
    (relative) below the regime boundary, so the target never drops because
    of a fluctuation; moving to a larger target happens immediately.
    """

    targets: tuple[tuple[float, int], ...] = DEFAULT_TARGETS
    max_trials: int = 10**9
    fixed_trials: int | None = None
    batch_size: int = 10_000
    margin: float = 0.1

    def __post_init__(self):
        check_positive_int(self.max_trials, "max_trials")
        check_positive_int(self.batch_size, "batch_size")
        if self.fixed_trials is not None and self.fixed_trials < 0:
            raise InvalidPlan(f"fixed_trials must be >= 0, got {self.fixed_trials}")

    def plain_target(self, p: float) -> int:
        for bound, failures in self.targets:
            if p > bound:
                return failures
        return self.targets[-1][1]

    def target(self, p: float, current: int | None) -> int:
        """Failure target for estimate ``p`` given the previous target."""
        plain = self.plain_target(p)
        if current is None or plain >= current:
            return plain
        return max(plain, self.plain_target(p * (1.0 + self.margin)))


@dataclass(frozen=True)
class RunPlan:
    """Everything that determines a Monte Carlo estimate."""

    family: str
    d: int
    noise: NoiseParams = field(default_factory=NoiseParams)
    algorithm: str = "uf"
    weighted_growth: bool = False
    iter_max: int = 1
    model: str = CODE_CAPACITY
    seed: int = 0
    stop: StopRule = field(default_factory=StopRule)
    workers: int = 1

    def resolved(self) -> "RunPlan":
        """Validated copy with phenomenological rounds filled in (``d + 1``)."""
        spec = CodeSpec(self.family, self.d)
        check_positive_int(self.workers, "workers")
        if self.model == CODE_CAPACITY:
            if self.noise.rounds != 1:
                raise InvalidPlan("code-capacity runs use a single round")
            if self.noise.meas_error_rate:
                raise InvalidPlan("code-capacity runs have no measurement errors")
            return self
        if self.model != PHENOMENOLOGICAL:
            raise InvalidPlan(f"unknown noise model {self.model!r}")
        noise = self.noise
        if noise.rounds == 1:
            noise = replace(noise, rounds=spec.d + 1)
        return replace(self, noise=noise)

    def key(self) -> str:
        """Stable identifier used by the sweep journal."""
        data = asdict(self)
        data.pop("workers")
        return json.dumps(data, sort_keys=True)


@dataclass
class MonteCarloStats:
    plan: RunPlan
    trials: int
    failures: int
    wall_time: float
    budget_exhausted: bool = False

    @property
    def p_L(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        if not self.trials:
            return 0.0
        p = self.p_L
        return math.sqrt(p * (1.0 - p) / self.trials)

    def row(self) -> dict:
        """Flat record; the first nine keys are the result-file columns."""
        plan = self.plan
        return {
            "family": plan.family,
            "d": plan.d,
            "epsilon": plan.noise.epsilon,
            "decoder": plan.algorithm,
            "wg": bool(plan.weighted_growth),
            "trials": self.trials,
            "failures": self.failures,
            "p_L": self.p_L,
            "stderr": self.stderr,
            "eta": plan.noise.eta,
            "erasure_rate": plan.noise.erasure_rate,
            "model": plan.model,
            "rounds": plan.noise.rounds,
            "iter_max": plan.iter_max,
            "seed": plan.seed,
            "wall_time": self.wall_time,
            "budget_exhausted": self.budget_exhausted,
        }


_DECODERS: dict[tuple, UnionFindDecoder] = {}


def _decoder_for(plan: RunPlan) -> UnionFindDecoder:
    """One fitted decoder per plan shape and process."""
    key = (plan.family, plan.d, plan.algorithm, bool(plan.weighted_growth), plan.iter_max, plan.noise.rounds)
    dec = _DECODERS.get(key)
    if dec is None:
        dec = UnionFindDecoder(
            plan.algorithm, plan.weighted_growth, plan.iter_max, rounds=plan.noise.rounds
        ).fit(build_code(plan.family, plan.d))
        _DECODERS[key] = dec
    return dec


def _noiseless(noise: NoiseParams) -> bool:
    return noise.epsilon == 0 and noise.erasure_rate == 0 and noise.flip_rate == 0


def batch_failures(plan: RunPlan, start: int, count: int) -> int:
    """Logical failures among trials ``start .. start + count - 1``."""
    if _noiseless(plan.noise):
        return 0
    dec = _decoder_for(plan)
    s = sample_batch(plan.noise, dec.code_, plan.seed, start, count)
    outcome = dec.engine_.run(s.x, s.z, s.flips_x, s.flips_z, s.erased)
    return int(outcome.sum())


def _batches(stop: StopRule) -> Iterable[tuple[int, int]]:
    limit = stop.fixed_trials if stop.fixed_trials is not None else stop.max_trials
    start = 0
    while start < limit:
        count = min(stop.batch_size, limit - start)
        yield start, count
        start += count


def run(plan: RunPlan) -> MonteCarloStats:
    """Estimate the logical error rate of ``plan``.

    A noiseless plan has ``p_L = 0`` exactly; without a fixed trial count it
    stops after one batch instead of running into ``max_trials``.
    """
    plan = plan.resolved()
    stop = plan.stop
    t0 = time.perf_counter()
    if _noiseless(plan.noise) and stop.fixed_trials is None:
        trials = min(stop.batch_size, stop.max_trials)
        return MonteCarloStats(plan, trials, 0, time.perf_counter() - t0)
    trials = failures = 0
    target = None
    done = False
    pool = ProcessPoolExecutor(plan.workers) if plan.workers > 1 else None
    try:
        batches = iter(_batches(stop))
        while not done:
            window = [b for _, b in zip(range(plan.workers), batches)]
            if not window:
                break
            if pool is None:
                counts = [batch_failures(plan, s, c) for s, c in window]
            else:
                counts = list(pool.map(batch_failures, [plan] * len(window), *zip(*window)))
            for (start, count), fails in zip(window, counts):
                trials += count
                failures += fails
                if stop.fixed_trials is None:
                    target = stop.target(failures / trials, target)
                    if failures >= target:
                        done = True
                        break
    finally:
        if pool is not None:
            pool.shutdown()
    exhausted = stop.fixed_trials is None and not done
    return MonteCarloStats(plan, trials, failures, time.perf_counter() - t0, exhausted)


# -- sweeps ----------------------------------------------------------------


def grid(
    families: Sequence[str],
    distances: Sequence[int],
    epsilons: Sequence[float],
    algorithms: Sequence[str] = ("uf",),
    weighted: Sequence[bool] = (False,),
    etas: Sequence[float] = (1.0,),
    **common,
) -> list[RunPlan]:
    """Cartesian product of plans sharing ``common`` settings."""
    noise_kw = {k: common.pop(k) for k in ("erasure_rate", "meas_error_rate", "rounds", "reduced_meas") if k in common}
    plans = []
    for family in families:
        for d in distances:
            for eps in epsilons:
                for eta in etas:
                    for alg in algorithms:
                        for wg in weighted:
                            noise = NoiseParams(epsilon=eps, eta=eta, **noise_kw)
                            plans.append(RunPlan(family, d, noise, alg, wg, **common))
    return plans


class Journal:
    """Completed sweep cells, one JSON object per line, rewritten atomically."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.entries: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    entry = json.loads(line)
                    self.entries[entry["key"]] = entry

    def get(self, key: str) -> dict | None:
        return self.entries.get(key)

    def record(self, entry: dict) -> None:
        self.entries[entry["key"]] = entry
        text = "".join(json.dumps(e) + "\n" for e in self.entries.values())
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)


def sweep(plans: Iterable[RunPlan], journal: str | Path | None = None) -> list[dict]:
    """Run every plan, skipping cells already completed in ``journal``.

    A cell that raises is kept in the table with ``status = "failed"`` and
    the error message; it is retried on the next resume.
    """
    book = Journal(journal) if journal is not None else None
    rows = []
    for plan in plans:
        key = plan.key()
        entry = book.get(key) if book is not None else None
        if entry is None or entry["status"] != "ok":
            try:
                row = run(plan).row()
                entry = {"key": key, "status": "ok", "row": row}
            except Exception as exc:  # recorded, not dropped
                entry = {"key": key, "status": "failed", "error": f"{type(exc).__name__}: {exc}", "row": None}
            if book is not None:
                book.record(entry)
        row = dict(entry["row"] or _failed_row(plan))
        row["status"] = entry["status"]
        if entry["status"] != "ok":
            row["error"] = entry.get("error")
        rows.append(row)
    return rows


def _failed_row(plan: RunPlan) -> dict:
    return {
        "family": plan.family,
        "d": plan.d,
        "epsilon": plan.noise.epsilon,
        "decoder": plan.algorithm,
        "wg": bool(plan.weighted_growth),
        "trials": 0,
        "failures": 0,
        "p_L": float("nan"),
        "stderr": float("nan"),
    }


def binomial_dispersion(p_values: Sequence[float], trials: int) -> tuple[float, int]:
    """Chi-square statistic of repeated estimates around their mean, and its dof."""
    p = np.asarray(p_values, float)
    mean = p.mean()
    var = mean * (1 - mean) / trials
    return float(((p - mean) ** 2).sum() / var), len(p) - 1
