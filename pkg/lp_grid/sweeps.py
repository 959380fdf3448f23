"""
Seeded sampling and sign sweeps shared by the constant estimators.

Each trial draws from its own generator keyed by (seed, stream, trial), so
the sample set for T trials is a prefix of the set for T+1 trials and a
length-n draw is a prefix of the length-(n+1) draw. Every sup taken over
these sets is therefore nondecreasing in trials and in n.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.conf import frames_setting
from core.exceptions import ParameterError
from .types import FunctionStack

SPAN_STREAM = 0
SIGN_STREAM = 1
SUBSET_STREAM = 2
HELD_OUT_STREAM = 3

EXHAUSTIVE = 'exhaustive'
SAMPLED = 'sampled'
MODES = (EXHAUSTIVE, SAMPLED)


def trial_generator(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def span_coefficients(count: int, trials: int, seed: int, stream: int = SPAN_STREAM,
                      complex_mode: bool = False) -> np.ndarray:
    """
    @atomic-function
    Seeded standard-normal coefficient rows, one generator per trial

    Returns:
        np.ndarray: (trials, count) coefficients
    """
    rows = np.zeros((trials, count), dtype=complex if complex_mode else float)
    for trial in range(trials):
        rng = trial_generator(seed, stream, trial)
        rows[trial] = rng.standard_normal(count)
        if complex_mode:
            rows[trial] = rows[trial] + 1j * trial_generator(seed, stream, trial, 1).standard_normal(count)
    return rows


def all_sign_vectors(count: int) -> np.ndarray:
    """All 2^count sign vectors; row 0 is the all-ones vector."""
    bits = (np.arange(2 ** count)[:, None] >> np.arange(count)) & 1
    return 1.0 - 2.0 * bits


def sampled_sign_vectors(count: int, samples: int, seed: int, complex_mode: bool = False) -> np.ndarray:
    """All-ones row followed by seeded random sign (or unimodular) rows."""
    rows = [np.ones(count, dtype=complex if complex_mode else float)]
    for trial in range(samples):
        rng = trial_generator(seed, SIGN_STREAM, trial)
        if complex_mode:
            rows.append(np.exp(2j * np.pi * rng.random(count)))
        else:
            rows.append(np.where(rng.standard_normal(count) < 0, -1.0, 1.0))
    return np.array(rows)


def sign_set(count: int, mode: str, samples: int, seed: int, complex_mode: bool = False,
             exhaustive_limit: Optional[int] = None) -> np.ndarray:
    """
    @atomic-function
    Sign vectors for a sweep: every sign vector, or a seeded sample

    Raises:
        ParameterError: exhaustive mode above the configured size limit
    """
    if mode not in MODES:
        raise ParameterError(f"Unknown sweep mode {mode!r}")
    if mode == EXHAUSTIVE:
        limit = frames_setting('EXHAUSTIVE_LIMIT', exhaustive_limit)
        if count > limit:
            raise ParameterError(f"Exhaustive sign sweep needs n <= {limit}, got {count}")
        return all_sign_vectors(count)
    return sampled_sign_vectors(count, samples, seed, complex_mode)


def prefix_rows(coefficients: np.ndarray) -> np.ndarray:
    """All truncations a[:m] (zero-padded), m = 1..n, of every row."""
    rows, count = coefficients.shape
    mask = np.tril(np.ones((count, count)))
    return (coefficients[:, None, :] * mask[None, :, :]).reshape(rows * count, count)


@dataclass(frozen=True)
class SweepResult:
    value: float
    row: int
    sign: int

    def witness(self, signs: np.ndarray) -> dict:
        if self.row < 0:
            return {}
        vector = signs[self.sign]
        entries = [float(v) for v in vector.real] if not np.iscomplexobj(vector) else vector.tolist()
        return {'sample': int(self.row), 'signs': entries}


def signed_expansion_sup(stack: FunctionStack, coefficients: np.ndarray, reference: np.ndarray,
                         signs: np.ndarray, p: float) -> SweepResult:
    """
    @atomic-function
    max over rows t and sign vectors c of ||sum c_i a_ti x_i||_p / reference_t

    Args:
        stack: the functions x_i
        coefficients: (T, n) expansion coefficients a_t
        reference: (T,) normalizing norms, rows with zero reference are skipped
        signs: (S, n) multipliers
        p: exponent of the norm

    Returns:
        SweepResult: sup value with the attaining row and sign index
    """
    best = SweepResult(0.0, -1, -1)
    for row, (coefficient, norm) in enumerate(zip(coefficients, reference)):
        if norm <= 0:
            continue
        ratios = stack.combination_norms(signs * coefficient, p) / norm
        index = int(np.argmax(ratios))
        if ratios[index] > best.value:
            best = SweepResult(float(ratios[index]), row, index)
    return best


def prefix_expansion_sup(stack: FunctionStack, coefficients: np.ndarray, reference: np.ndarray,
                         p: float) -> Tuple[float, int, int]:
    """max over rows t and prefixes m of ||sum_{i<=m} a_ti x_i||_p / reference_t."""
    best, witness = 0.0, (-1, -1)
    count = coefficients.shape[1]
    mask = np.tril(np.ones((count, count)))
    for row, (coefficient, norm) in enumerate(zip(coefficients, reference)):
        if norm <= 0:
            continue
        ratios = stack.combination_norms(mask * coefficient, p) / norm
        index = int(np.argmax(ratios))
        if ratios[index] > best:
            best, witness = float(ratios[index]), (row, index + 1)
    return best, witness[0], witness[1]
