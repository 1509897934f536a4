"""Ten fluctuation parameters of a trendless sequence.

A trendless sequence (TLS) is an ordered block of real samples that
fluctuates around its mean without a systematic trend.  The first eight
parameters compare its positive and negative deviations; the last two come
from a straight-line fit to the positions of its zero crossings, which yields
a mean oscillation frequency and phase.

All functions are pure and operate on 1-D float arrays (anything
``np.asarray`` accepts).  Deviations are always taken from the arithmetic
mean, so every parameter except P1 is shift-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateAsymmetryError,
    DegenerateFitError,
    DegenerateSequenceError,
    FeatureError,
    InsufficientRootsError,
    NonFiniteInputError,
    OneSidedSequenceError,
)

FEATURE_NAMES = ("P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10")

MIN_SEQUENCE_LENGTH = 8


@dataclass(frozen=True)
class FeatureVector:
    """The ten fluctuation parameters of one sequence."""

    p1: float
    p2: float
    p3: float
    p4: float
    p5: float
    p6: float
    p7: float
    p8: float
    p9: float
    p10: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p1, self.p2, self.p3, self.p4, self.p5,
             self.p6, self.p7, self.p8, self.p9, self.p10]
        )

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (10,):
            raise ValueError(f"expected 10 values, got shape {values.shape}")
        return cls(*values.tolist())


@dataclass(frozen=True)
class RootLineFit:
    """Least-squares line through the zero-crossing positions.

    ``a`` is the spacing between successive crossings (samples per root
    index), ``b`` the intercept, ``residual_rms`` the RMS deviation of the
    crossings from the fitted line (useful to spot noisy root sets).
    """

    a: float
    b: float
    residual_rms: float


def _as_sequence(seq, min_len: int = 1) -> np.ndarray:
    y = np.asarray(seq, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {y.shape}")
    if y.size < min_len:
        raise DegenerateSequenceError(
            f"sequence has {y.size} samples, need at least {min_len}"
        )
    if not np.all(np.isfinite(y)):
        raise NonFiniteInputError("sequence contains NaN or infinite samples")
    return y


def center(seq) -> np.ndarray:
    """Subtract the arithmetic mean, returning the deviation sequence."""
    y = _as_sequence(seq)
    return y - y.mean()


def p1_mean(seq) -> float:
    """P1: arithmetic mean of the sequence."""
    return float(_as_sequence(seq).mean())


def p2_range(seq) -> float:
    """P2: range between the positive and negative deviation extremes.

    Equals ``max(y) - min(y)``; 0.0 for a constant sequence.
    """
    dy = center(_as_sequence(seq, min_len=2))
    return float(dy.max() - dy.min())


def p3_relative_intensity(seq) -> float:
    """P3: relative intensity of positive versus negative deviations.

    ``max(Dy) - |min(Dy)|`` on the deviations ``Dy = y - mean(y)``.  Positive
    when upward spikes dominate, negative when downward ones do.
    """
    dy = center(_as_sequence(seq, min_len=2))
    hi, lo = dy.max(), dy.min()
    if hi <= 0 or lo >= 0:
        raise OneSidedSequenceError(
            "need deviations of both signs", parameter="P3"
        )
    return float(hi - abs(lo))


def _walk(dy: np.ndarray) -> np.ndarray:
    """Cumulative sum of deviations, prefixed with 0."""
    out = np.empty(dy.size + 1)
    out[0] = 0.0
    np.cumsum(dy, out=out[1:])
    return out


def p4_cumulative_range(seq) -> float:
    """P4: range of the running sum of deviations.

    The walk starts at 0, so the reported range always straddles zero.
    """
    j = _walk(center(_as_sequence(seq, min_len=2)))
    return float(j.max() - j.min())


def p5_asymmetry(seq) -> float:
    """P5: vertical asymmetry ``(max - mean) / (mean - min)``.

    1.0 marks a sequence whose extremes sit symmetrically about the mean.
    """
    y = _as_sequence(seq, min_len=2)
    m = y.mean()
    lo = y.min()
    if not m > lo:
        raise DegenerateAsymmetryError(
            "mean equals minimum; asymmetry undefined", parameter="P5"
        )
    return float((y.max() - m) / (m - lo))


def p6_horizontal_asymmetry(seq) -> float:
    """P6: horizontal asymmetry of the deviation signs.

    Difference between the largest 1-based sample index with a positive
    deviation and the largest with a negative one.
    """
    dy = center(_as_sequence(seq, min_len=2))
    up = np.nonzero(dy > 0)[0]
    dn = np.nonzero(dy < 0)[0]
    if up.size == 0 or dn.size == 0:
        raise OneSidedSequenceError(
            "need deviations of both signs", parameter="P6"
        )
    return float((up[-1] + 1) - (dn[-1] + 1))


def p7_bell_max(seq) -> float:
    """P7: maximum of the bell curve built from the ordered deviations.

    Deviations sorted in descending order are accumulated; the running sum
    rises while the deviations are positive and falls afterwards, so its
    maximum (with the empty prefix counting as 0) separates the positive
    branch from the negative one.
    """
    dy = center(_as_sequence(seq, min_len=2))
    bell = _walk(np.sort(dy)[::-1])
    return float(bell.max())


def p8_normalized_integral_range(seq) -> float:
    """P8: range of the running sum of range-normalized deviations.

    The sequence is rescaled to unit range before the walk, which makes the
    result comparable across sequences of different amplitude; identical to
    ``p4 / p2``.
    """
    y = _as_sequence(seq, min_len=2)
    dy = y - y.mean()
    rng = y.max() - y.min()
    if rng == 0:
        raise DegenerateSequenceError(
            "constant sequence has no range to normalize by", parameter="P8"
        )
    j = _walk(dy / rng)
    return float(j.max() - j.min())


def find_roots(seq) -> np.ndarray:
    """Zero-crossing positions of a deviation sequence.

    The input is taken as already centered (``Dy = y - mean(y)``); its sign
    changes between neighbours are located by linear interpolation, and
    samples that are exactly zero are roots themselves, with runs of
    consecutive zeros collapsed to their first index.  Returns fractional
    0-based positions in increasing order (possibly empty).
    """
    dy = _as_sequence(seq, min_len=2)
    roots = []

    zero = dy == 0.0
    if zero.any():
        idx = np.nonzero(zero)[0]
        keep = np.ones(idx.size, dtype=bool)
        keep[1:] = np.diff(idx) > 1
        roots.extend(idx[keep].astype(float))

    prod = dy[:-1] * dy[1:]
    cross = np.nonzero(prod < 0)[0]
    if cross.size:
        frac = dy[cross] / (dy[cross] - dy[cross + 1])
        roots.extend(cross + frac)

    return np.sort(np.array(roots, dtype=float))


def fit_root_line(roots) -> RootLineFit:
    """Ordinary least squares of root positions against their 1-based index."""
    r = np.asarray(roots, dtype=float)
    if r.size < 2:
        raise InsufficientRootsError(
            f"need at least 2 roots, got {r.size}", parameter="P9"
        )
    k = np.arange(1, r.size + 1, dtype=float)
    k_mean, r_mean = k.mean(), r.mean()
    sxx = float(((k - k_mean) ** 2).sum())
    sxy = float(((k - k_mean) * (r - r_mean)).sum())
    a = sxy / sxx
    b = r_mean - a * k_mean
    if a <= 0:
        raise DegenerateFitError(
            f"root-line slope {a} is not positive", parameter="P9"
        )
    resid = r - (a * k + b)
    return RootLineFit(a=a, b=b, residual_rms=float(np.sqrt(np.mean(resid**2))))


def p9_p10_from_fit(fit: RootLineFit) -> tuple[float, float]:
    """P9 and P10: mean angular frequency and phase of the oscillation.

    Successive crossings of ``cos(w*t - phi)`` are ``pi/a`` apart in angle,
    so ``w = pi / a``; matching the constant terms gives
    ``phi = pi*b/a - pi/2``, reported modulo pi in ``[0, pi)`` because the
    choice of which crossing counts as the first shifts the phase by pi.
    """
    if fit.a <= 0:
        raise DegenerateFitError(
            f"root-line slope {fit.a} is not positive", parameter="P9"
        )
    p9 = np.pi / fit.a
    p10 = (np.pi * fit.b / fit.a - np.pi / 2.0) % np.pi
    if p10 >= np.pi:  # float wrap guard
        p10 -= np.pi
    return float(p9), float(p10)


def extract_features(seq) -> FeatureVector:
    """Compute all ten parameters for one sequence.

    Needs at least 8 samples, deviations of both signs, and at least two
    zero crossings.  Failures identify the parameter that could not be
    computed via the exception's ``parameter`` attribute.
    """
    y = _as_sequence(seq, min_len=MIN_SEQUENCE_LENGTH)

    def tag(param, fn, *args):
        try:
            return fn(*args)
        except FeatureError as exc:
            if exc.parameter is None:
                exc.parameter = param
            raise

    p1 = p1_mean(y)
    p2 = tag("P2", p2_range, y)
    if p2 == 0:
        raise DegenerateSequenceError("constant sequence", parameter="P2")
    p3 = tag("P3", p3_relative_intensity, y)
    p4 = tag("P4", p4_cumulative_range, y)
    p5 = tag("P5", p5_asymmetry, y)
    p6 = tag("P6", p6_horizontal_asymmetry, y)
    p7 = tag("P7", p7_bell_max, y)
    p8 = tag("P8", p8_normalized_integral_range, y)
    fit = tag("P9", fit_root_line, find_roots(y - y.mean()))
    p9, p10 = p9_p10_from_fit(fit)
    return FeatureVector(p1, p2, p3, p4, p5, p6, p7, p8, p9, p10)
