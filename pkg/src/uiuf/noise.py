"""Error sampling for code-capacity, biased, erasure and phenomenological noise.

Randomness comes from numpy's counter-based Philox generator.  Each stream
(Pauli channel, erasure flags, erased-qubit Paulis, X- and Z-check
measurement flips) has its own key ``(seed, tag)``, and trial ``t`` reads the
block of counters starting at ``t * words_per_trial / 4``.  A trial's draws
are therefore a pure function of ``(seed, trial_index, tag)``; generating a
contiguous range of trials in one call gives exactly the same numbers as
generating them one at a time.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from ._validation import check_positive_int, check_positive_real, check_probability
from .codes import PauliOp, TopologicalCode


class Stream(enum.IntEnum):
    PAULI = 1
    ERASURE = 2
    ERASED_PAULI = 3
    MEAS_X = 4
    MEAS_Z = 5


@dataclass(frozen=True)
class NoiseParams:
    """Physical noise model.

    ``epsilon`` is the total Pauli error rate per qubit and round, split as
    ``p_X = p_Y = epsilon / (2 + eta)`` and ``p_Z = eta * epsilon / (2 + eta)``
    (``eta = 1`` is depolarizing).  With ``rounds > 1`` every round but the
    last has measurement flips at rate ``meas_error_rate``, which defaults to
    ``epsilon`` (or ``2 * epsilon / 3`` with ``reduced_meas``).
    """

    epsilon: float = 0.0
    eta: float = 1.0
    erasure_rate: float = 0.0
    meas_error_rate: float | None = None
    rounds: int = 1
    reduced_meas: bool = False

    def __post_init__(self):
        check_probability(self.epsilon, "epsilon")
        check_positive_real(self.eta, "eta")
        check_probability(self.erasure_rate, "erasure_rate")
        if self.meas_error_rate is not None:
            check_probability(self.meas_error_rate, "meas_error_rate")
        check_positive_int(self.rounds, "rounds")

    @property
    def pauli_rates(self) -> tuple[float, float, float]:
        """``(p_X, p_Y, p_Z)``."""
        px = self.epsilon / (2.0 + self.eta)
        return px, px, self.eta * px

    @property
    def flip_rate(self) -> float:
        """Measurement flip probability of the non-final rounds."""
        if self.rounds == 1:
            return 0.0
        if self.meas_error_rate is not None:
            return self.meas_error_rate
        return self.epsilon * (2.0 / 3.0 if self.reduced_meas else 1.0)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "NoiseParams":
        """Build from string-valued settings (CLI flags, config files).

        Unknown keys are ignored so that one flat mapping can configure
        several components.
        """
        kwargs = {}
        for f in fields(cls):
            if f.name not in values or values[f.name] is None:
                continue
            raw = values[f.name]
            if f.name == "rounds":
                kwargs[f.name] = int(raw)
            elif f.name == "reduced_meas":
                kwargs[f.name] = _parse_bool(raw)
            else:
                kwargs[f.name] = float(raw)
        return cls(**kwargs)


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def read_config(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    settings = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        settings[key.replace("-", "_")] = value
    return settings


@dataclass
class ErrorSample:
    """Noise realized in one trial.

    ``x``/``z``/``erased`` have shape ``(rounds, n)``; ``flips_x``/``flips_z``
    have shape ``(rounds, m)``, the last row always zero.
    """

    x: np.ndarray
    z: np.ndarray
    erased: np.ndarray
    flips_x: np.ndarray
    flips_z: np.ndarray

    @property
    def rounds(self) -> int:
        return self.x.shape[0]

    @property
    def pauli_per_round(self) -> list[PauliOp]:
        return [PauliOp(x, z) for x, z in zip(self.x, self.z)]

    @property
    def erasures(self) -> set[int]:
        """Qubits erased in any round."""
        return set(np.flatnonzero(self.erased.any(axis=0)).tolist())

    @property
    def erased_pairs(self) -> list[tuple[int, int]]:
        """``(qubit, round)`` of every erasure."""
        return [(int(q), int(r)) for r, q in zip(*np.nonzero(self.erased))]

    @property
    def meas_flips_per_round(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.flips_x, self.flips_z))

    def total_error(self) -> PauliOp:
        """Product of the data errors of all rounds."""
        return PauliOp(np.bitwise_xor.reduce(self.x, axis=0), np.bitwise_xor.reduce(self.z, axis=0))


def _uniforms(seed: int, stream: Stream, start: int, count: int, per_trial: int) -> np.ndarray:
    """Uniform draws of trials ``start .. start + count - 1``, shape ``(count, per_trial)``."""
    words = -(-per_trial // 4) * 4
    counter = start * (words // 4)
    bitgen = np.random.Philox(
        key=np.array([seed & 0xFFFFFFFFFFFFFFFF, int(stream)], np.uint64),
        counter=np.array([counter & 0xFFFFFFFFFFFFFFFF, counter >> 64, 0, 0], np.uint64),
    )
    draws = np.random.Generator(bitgen).random(count * words).reshape(count, words)
    return draws[:, :per_trial]


def sample_batch(params: NoiseParams, code: TopologicalCode, seed: int, start: int, count: int) -> ErrorSample:
    """Samples of trials ``start .. start + count - 1`` stacked along a leading axis."""
    rounds, n = params.rounds, code.n
    mx, mz = len(code.x_stabilizers), len(code.z_stabilizers)
    x = np.zeros((count, rounds, n), np.uint8)
    z = np.zeros((count, rounds, n), np.uint8)
    erased = np.zeros((count, rounds, n), np.uint8)
    fx = np.zeros((count, rounds, mx), np.uint8)
    fz = np.zeros((count, rounds, mz), np.uint8)
    if params.epsilon > 0:
        px, py, _ = params.pauli_rates
        u = _uniforms(seed, Stream.PAULI, start, count, rounds * n).reshape(count, rounds, n)
        hit = u < params.epsilon
        x[:] = u < px + py
        z[:] = hit & (u >= px)
    if params.erasure_rate > 0:
        u = _uniforms(seed, Stream.ERASURE, start, count, rounds * n).reshape(count, rounds, n)
        erased[:] = u < params.erasure_rate
        kind = (4 * _uniforms(seed, Stream.ERASED_PAULI, start, count, rounds * n)).astype(np.uint8)
        kind = kind.reshape(count, rounds, n)
        mask = erased.astype(bool)
        x[mask] = kind[mask] & 1
        z[mask] = kind[mask] >> 1
    q = params.flip_rate
    if q > 0 and rounds > 1:
        u = _uniforms(seed, Stream.MEAS_X, start, count, rounds * mx).reshape(count, rounds, mx)
        fx[:, :-1] = u[:, :-1] < q
        u = _uniforms(seed, Stream.MEAS_Z, start, count, rounds * mz).reshape(count, rounds, mz)
        fz[:, :-1] = u[:, :-1] < q
    return ErrorSample(x, z, erased, fx, fz)


def sample(params: NoiseParams, code: TopologicalCode, seed: int, trial_index: int) -> ErrorSample:
    """The error realized in trial ``trial_index`` of the run keyed by ``seed``."""
    batch = sample_batch(params, code, seed, trial_index, 1)
    return ErrorSample(batch.x[0], batch.z[0], batch.erased[0], batch.flips_x[0], batch.flips_z[0])


def observed_syndromes(sample: ErrorSample, code: TopologicalCode) -> tuple[np.ndarray, np.ndarray]:
    """Measured X- and Z-check outcomes per round, shapes ``(rounds, m)``.

    Data errors accumulate, so round ``l`` sees the product of the errors of
    rounds ``0..l``; measurement flips only affect their own round.
    """
    acc_x = np.bitwise_xor.accumulate(sample.x, axis=0)
    acc_z = np.bitwise_xor.accumulate(sample.z, axis=0)
    sx = (acc_z.astype(np.int64) @ code.hx.T.astype(np.int64)) % 2
    sz = (acc_x.astype(np.int64) @ code.hz.T.astype(np.int64)) % 2
    return (sx.astype(np.uint8) ^ sample.flips_x, sz.astype(np.uint8) ^ sample.flips_z)


def syndrome_differences(syndromes: np.ndarray) -> np.ndarray:
    """``diff[l] = s[l] XOR s[l-1]`` with ``s[-1] = 0``."""
    s = np.asarray(syndromes, np.uint8)
    diff = s.copy()
    diff[1:] ^= s[:-1]
    return diff
