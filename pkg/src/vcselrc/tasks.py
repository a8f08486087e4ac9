"""Benchmark targets and metrics: memory probes, header recognition, XOR, DAC.

Targets are pure functions of the injected sequence. Positions whose window
reaches before the start of the record are marked invalid (NaN target plus a
validity mask) and are excluded from training and scoring rather than
zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TASK_KINDS = ("memory", "header_recognition", "xor", "dac")


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    m_or_k: int
    header: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.m_or_k < 1:
            raise ValueError("m_or_k must be >= 1")
        if self.header is not None and len(self.header) != self.m_or_k:
            raise ValueError("header length must equal m")


@dataclass
class TaskResult:
    """Metric values for one task at one operating condition."""

    metric_name: str
    value: float
    baseline: float
    per_fold: np.ndarray
    detail: dict = field(default_factory=dict)

    @property
    def fold_std(self) -> float:
        return float(np.std(self.per_fold)) if len(self.per_fold) else 0.0


def target_memory(r: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k-step recall target y_n = r_{n-k}; the first k positions are invalid."""
    r = np.asarray(r, dtype=float)
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= len(r):
        raise ValueError(f"delay k={k} must be smaller than the sequence length {len(r)}")
    y = np.full(len(r), np.nan)
    valid = np.zeros(len(r), dtype=bool)
    if k == 0:
        y[:] = r
        valid[:] = True
    else:
        y[k:] = r[:-k]
        valid[k:] = True
    return y, valid


def target_header(r: np.ndarray, header) -> tuple[np.ndarray, np.ndarray]:
    """1 where the m most recent bits (r_{n-m+1}..r_n) equal ``header``."""
    r = _check_bits(r)
    header = np.asarray(header, dtype=int)
    m = len(header)
    if m < 1:
        raise ValueError("header must contain at least one bit")
    y = np.full(len(r), np.nan)
    valid = np.zeros(len(r), dtype=bool)
    for n in range(m - 1, len(r)):
        y[n] = 1.0 if np.array_equal(r[n - m + 1 : n + 1], header) else 0.0
        valid[n] = True
    return y, valid


def target_xor(r: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """m-bit parity of the window r_{n-m+1}..r_n."""
    r = _check_bits(r)
    if m < 1:
        raise ValueError("m must be >= 1")
    y = np.full(len(r), np.nan)
    valid = np.zeros(len(r), dtype=bool)
    if m <= len(r):
        windows = np.lib.stride_tricks.sliding_window_view(r, m)
        y[m - 1 :] = windows.sum(axis=1) % 2
        valid[m - 1 :] = True
    return y, valid


def target_dac(r: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized binary value of the window, first injected bit most significant.

    y_n = sum_k 2^(m-k) r_{n-m+k} / (2^m - 1), so y is a multiple of 1/(2^m-1).
    """
    r = _check_bits(r)
    if m < 1:
        raise ValueError("m must be >= 1")
    y = np.full(len(r), np.nan)
    valid = np.zeros(len(r), dtype=bool)
    if m <= len(r):
        windows = np.lib.stride_tricks.sliding_window_view(r, m)
        place = 2.0 ** np.arange(m - 1, -1, -1)
        y[m - 1 :] = windows @ place / (2.0**m - 1.0)
        valid[m - 1 :] = True
    return y, valid


def _check_bits(r) -> np.ndarray:
    r = np.asarray(r)
    vals = np.unique(r)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError("bit sequence must contain only 0 and 1")
    return r.astype(int)


def memory_correlation(a: np.ndarray, r: np.ndarray, k: int) -> float:
    """Squared Pearson correlation between outputs a_n and inputs r_{n-k}.

    a must already be restricted to positions n >= k; r is the full input
    record. Degenerate (zero-variance) outputs or inputs give 0.
    """
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    delayed = r[: len(r) - k] if k > 0 else r
    if len(a) != len(delayed):
        raise ValueError(f"output length {len(a)} does not match delayed-input length {len(delayed)}")
    if len(a) < 2:
        raise ValueError("need at least 2 samples")
    sa = np.std(a)
    sr = np.std(delayed)
    if sa == 0.0 or sr == 0.0:
        return 0.0
    c = np.mean((a - a.mean()) * (delayed - delayed.mean())) / (sa * sr)
    return float(c * c)


def memory_correlation_pairs(a: np.ndarray, targets: np.ndarray) -> float:
    """Squared Pearson correlation on already-aligned (output, target) pairs."""
    a = np.asarray(a, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(a) != len(targets):
        raise ValueError("length mismatch")
    if len(a) < 2:
        raise ValueError("need at least 2 samples")
    sa, st = np.std(a), np.std(targets)
    if sa == 0.0 or st == 0.0:
        return 0.0
    c = np.mean((a - a.mean()) * (targets - targets.mean())) / (sa * st)
    return float(c * c)


def memory_capacity(m_by_k: dict[int, float], k_max: int = 10) -> float:
    """Sum of memory correlations for k = 1..k_max."""
    missing = [k for k in range(1, k_max + 1) if k not in m_by_k]
    if missing:
        raise ValueError(f"memory correlations missing for k={missing}")
    return float(sum(m_by_k[k] for k in range(1, k_max + 1)))


def ber(decisions: np.ndarray, targets: np.ndarray) -> float:
    """Bit error ratio of Boolean decisions against Boolean targets."""
    decisions = np.asarray(decisions).astype(bool)
    targets = np.asarray(targets).astype(bool)
    if decisions.shape != targets.shape:
        raise ValueError("shape mismatch")
    if decisions.size == 0:
        raise ValueError("empty input")
    return float(np.mean(decisions != targets))


def rmse(a: np.ndarray, y: np.ndarray) -> float:
    """Root-mean-square error between outputs and targets."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.shape != y.shape:
        raise ValueError("shape mismatch")
    if a.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((a - y) ** 2)))


def all_headers(m: int):
    """All 2^m headers, ordered by their binary value, MSB first."""
    return [tuple((h >> (m - 1 - i)) & 1 for i in range(m)) for h in range(2**m)]


def trivial_baseline(kind: str, m: int) -> float:
    """Score of the trivial guess: all-zeros for HR, 0.5 for DAC/XOR outputs.

    HR: guessing 0 everywhere errs exactly on the matching positions, BER0 =
    2^-m. DAC: RMSE of the constant 0.5 against the 2^m equiprobable levels.
    XOR: parity of fair bits is fair, so any constant guess gives BER 0.5.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if kind == "header_recognition":
        return 2.0**-m
    if kind == "dac":
        levels = np.arange(2**m) / (2.0**m - 1.0)
        return float(np.sqrt(np.mean((0.5 - levels) ** 2)))
    if kind == "xor":
        return 0.5
    if kind == "memory":
        return 0.0
    raise ValueError(f"unknown task kind {kind!r}")
