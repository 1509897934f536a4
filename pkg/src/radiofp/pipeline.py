"""Baseband pipeline: reference waveform, device simulation, sync, error phase.

The reference ("etalon") waveform is trans-noise: decimal digits of pi mapped
linearly onto DAC amplitude levels, digit 0 at -1 and digit 9 at +1.  A
received stream is aligned to the etalon by cross-correlation, normalized by
a complex least-squares gain, and the etalon is subtracted; the per-sample
phase of the remaining error signal is the trendless sequence handed to
feature extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DigitTableExhaustedError, SyncNotFoundError, ZeroGainError
from .pi_digits import PI_DIGITS

DEFAULT_FRAME_LEN = 1024
MIN_ETALON_LEN = 64
DEFAULT_SYNC_THRESHOLD = 3.0


def gen_transnoise(frame_index: int, length: int) -> np.ndarray:
    """Real amplitude sequence from one frame's worth of pi digits.

    ``frame_index`` 0 takes digits 1..L, 1 takes digits L+1..2L (the digit
    stream starts "3, 1, 4, 1, 5, ..." with the decimal point skipped).
    Digit d maps to amplitude ``-1 + 2*d/9``.
    """
    if frame_index not in (0, 1):
        raise ValueError("frame_index must be 0 or 1")
    if length < 1:
        raise ValueError("length must be positive")
    stop = (frame_index + 1) * length
    if stop > len(PI_DIGITS):
        raise DigitTableExhaustedError(
            f"need {stop} digits, table holds {len(PI_DIGITS)}"
        )
    chunk = PI_DIGITS[frame_index * length : stop]
    digits = np.frombuffer(chunk.encode("ascii"), dtype=np.uint8) - ord("0")
    return -1.0 + 2.0 * digits / 9.0


def transnoise_etalon(length: int = DEFAULT_FRAME_LEN,
                      frame_index: int = 0) -> np.ndarray:
    """Complex baseband etalon carrying the trans-noise amplitudes."""
    return gen_transnoise(frame_index, length).astype(complex)


@dataclass(frozen=True)
class ImpairmentProfile:
    """Analog front-end imperfections of one simulated transmitter.

    ``snr_db=None`` disables additive noise entirely (an ideal channel);
    when set it must be finite.
    """

    gain_imbalance: float = 0.0
    quadrature_error: float = 0.0
    phase_noise_rms: float = 0.0
    cubic_nonlinearity: float = 0.0
    dc_offset: complex = 0j
    snr_db: float | None = None

    def __post_init__(self):
        if self.phase_noise_rms < 0:
            raise ValueError("phase_noise_rms must be >= 0")
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite (or None to disable)")

    def to_json_dict(self) -> dict:
        return {
            "gain_imbalance": self.gain_imbalance,
            "quadrature_error": self.quadrature_error,
            "phase_noise_rms": self.phase_noise_rms,
            "cubic_nonlinearity": self.cubic_nonlinearity,
            "dc_offset": [self.dc_offset.real, self.dc_offset.imag],
            "snr_db": self.snr_db,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ImpairmentProfile":
        dc = d.get("dc_offset", [0.0, 0.0])
        return cls(
            gain_imbalance=float(d.get("gain_imbalance", 0.0)),
            quadrature_error=float(d.get("quadrature_error", 0.0)),
            phase_noise_rms=float(d.get("phase_noise_rms", 0.0)),
            cubic_nonlinearity=float(d.get("cubic_nonlinearity", 0.0)),
            dc_offset=complex(dc[0], dc[1]),
            snr_db=None if d.get("snr_db") is None else float(d["snr_db"]),
        )


@dataclass
class IQFrame:
    """One synchronized block of L complex samples.

    ``lag`` is the integer sample offset the frame was cut at; ``lag_frac``
    the sub-sample refinement of the correlation peak around it.
    """

    samples: np.ndarray
    source_label: str | None = None
    lag: int | None = None
    lag_frac: float = field(default=0.0)


def simulate_device(clean, profile: ImpairmentProfile, seed: int) -> np.ndarray:
    """Pass a clean frame through a simulated imperfect transmitter.

    Applies, in order: cubic nonlinearity ``x + c*x*|x|^2``, I/Q gain and
    quadrature imbalance, DC offset, per-sample Gaussian phase jitter, and
    AWGN at the configured SNR.  Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    x = np.asarray(clean, dtype=complex).copy()

    if profile.cubic_nonlinearity != 0.0:
        x = x + profile.cubic_nonlinearity * x * np.abs(x) ** 2

    g = profile.gain_imbalance
    phi = profile.quadrature_error
    if g != 0.0 or phi != 0.0:
        i = x.real
        q = x.imag
        x = (1.0 + 0.5 * g) * i + 1j * (
            (1.0 - 0.5 * g) * (np.cos(phi) * q + np.sin(phi) * i)
        )

    if profile.dc_offset != 0:
        x = x + profile.dc_offset

    if profile.phase_noise_rms > 0.0:
        jitter = rng.normal(0.0, profile.phase_noise_rms, x.size)
        x = x * np.exp(1j * jitter)

    if profile.snr_db is not None:
        p_sig = float(np.mean(np.abs(x) ** 2))
        p_noise = p_sig * 10.0 ** (-profile.snr_db / 10.0)
        sigma = math.sqrt(p_noise / 2.0)
        x = x + sigma * (rng.normal(size=x.size) + 1j * rng.normal(size=x.size))

    return x


def _cross_correlation_mag(stream: np.ndarray, etalon: np.ndarray) -> np.ndarray:
    """|c[k]| with c[k] = sum_m stream[k+m] * conj(etalon[m]), k = 0..n-L."""
    n = stream.size
    length = etalon.size
    nfft = 1 << (n + length - 1).bit_length()
    spec = np.fft.fft(stream, nfft) * np.conj(np.fft.fft(etalon, nfft))
    corr = np.fft.ifft(spec)[: n - length + 1]
    return np.abs(corr)


def _parabolic_offset(mag: np.ndarray, k: int) -> float:
    """Sub-sample peak offset from a 3-point parabola; 0 at the edges."""
    if k <= 0 or k >= mag.size - 1:
        return 0.0
    ym1, y0, yp1 = mag[k - 1], mag[k], mag[k + 1]
    denom = ym1 - 2.0 * y0 + yp1
    if denom == 0.0:
        return 0.0
    return float(0.5 * (ym1 - yp1) / denom)


def _check_etalon(etalon) -> np.ndarray:
    e = np.asarray(etalon, dtype=complex)
    if e.size < MIN_ETALON_LEN:
        raise ValueError(f"etalon must have at least {MIN_ETALON_LEN} samples")
    if not np.any(e):
        raise ValueError("etalon has zero energy")
    return e


def synchronize(stream, etalon, threshold: float = DEFAULT_SYNC_THRESHOLD,
                search_width: int = 8) -> list[IQFrame]:
    """Slice a stream into etalon-aligned frames.

    The first repetition is located by the strongest correlation peak within
    the first L lags; subsequent frames re-synchronize inside a
    ``search_width`` window around last lag + L so a slow sampling-clock
    offset cannot accumulate.  Each accepted peak must exceed ``threshold``
    times the mean correlation magnitude.  The fractional part of each lag
    (3-point parabolic refinement) is reported on the frame; samples are cut
    at the integer lag.
    """
    e = _check_etalon(etalon)
    x = np.asarray(stream, dtype=complex)
    length = e.size
    if x.size < length:
        raise ValueError("stream shorter than one frame")

    mag = _cross_correlation_mag(x, e)

    def ratio(k: int) -> float:
        # mean magnitude outside the peak's immediate neighbourhood; with no
        # outside lags left (stream barely longer than one frame) the test
        # degenerates and any non-zero peak is accepted
        outside = np.concatenate([mag[: max(0, k - 2)], mag[k + 3 :]])
        if outside.size == 0:
            return math.inf if mag[k] > 0 else 0.0
        mean_mag = float(outside.mean())
        return math.inf if mean_mag == 0.0 else float(mag[k]) / mean_mag

    k0 = int(np.argmax(mag[: min(length, mag.size)]))
    if ratio(k0) < threshold:
        raise SyncNotFoundError(
            f"peak-to-mean ratio {ratio(k0):.2f} below {threshold}"
        )

    frames = []
    k = k0
    while k + length <= x.size:
        frames.append(
            IQFrame(samples=x[k : k + length].copy(), lag=k,
                    lag_frac=_parabolic_offset(mag, k))
        )
        expected = k + length
        if expected + length > x.size:
            break
        lo = max(0, expected - search_width)
        hi = min(mag.size, expected + search_width + 1)
        k_next = lo + int(np.argmax(mag[lo:hi]))
        if ratio(k_next) < threshold:
            break
        k = k_next
    return frames


def error_phase(frame, etalon) -> np.ndarray:
    """Per-sample phase of the gain-normalized error signal.

    The frame is divided by the complex least-squares gain
    ``g = <frame, etalon> / <etalon, etalon>`` (which absorbs any channel
    gain and carrier rotation) and the etalon subtracted; the result is the
    wrapped principal argument in (-pi, pi].  Error samples whose magnitude
    is below 1e-12 of the etalon RMS carry only rounding noise, so their
    phase is reported as 0 (this covers the exactly-zero case too).
    """
    e = _check_etalon(etalon)
    f = np.asarray(frame.samples if isinstance(frame, IQFrame) else frame,
                   dtype=complex)
    if f.size != e.size:
        raise ValueError("frame and etalon must have equal length")
    energy = float(np.vdot(e, e).real)
    gain = np.vdot(e, f) / energy
    etalon_rms = math.sqrt(energy / e.size)
    if abs(gain) < 1e-12 * etalon_rms:
        raise ZeroGainError("least-squares gain is numerically zero")
    err = f / gain - e
    phases = np.angle(err)
    # np.angle maps a negative-real value with -0.0 imaginary part to -pi;
    # fold it back into (-pi, pi]
    phases[phases == -np.pi] = np.pi
    phases[np.abs(err) <= 1e-12 * etalon_rms] = 0.0
    return phases


@dataclass(frozen=True)
class CaptureResult:
    """Phase sequences per frame plus the indices of skipped frames."""

    sequences: list
    skipped: list


def run_capture_pipeline(stream, etalon,
                         threshold: float = DEFAULT_SYNC_THRESHOLD) -> CaptureResult:
    """synchronize + error_phase over a whole stream, in stream order."""
    e = _check_etalon(etalon)
    frames = synchronize(stream, e, threshold=threshold)
    sequences = []
    skipped = []
    for i, frame in enumerate(frames):
        try:
            sequences.append(error_phase(frame, e))
        except ZeroGainError:
            skipped.append(i)
    return CaptureResult(sequences=sequences, skipped=skipped)
