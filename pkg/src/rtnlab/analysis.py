"""Signal and bitstream analytics: spectra, level/dwell statistics,
time-lag plots, autocorrelation, entropy, bitmaps, Markov prediction.

Spectral estimates use Welch averaging (Hann window, 50% overlap by
default) with one-sided density scaling, so the integral of the PSD
over frequency recovers the signal variance. The telegraph-noise fit
is a two-parameter Lorentzian plateau/corner model in log space; the
high-frequency exponent is a separate straight-line fit above the
fitted corner.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import optimize, signal

from .bitgen import BitStream
from .errors import AnalysisError, ConfigError

# ------------------------------------------------------------------ types


@dataclass
class SpectrumEstimate:
    freqs: np.ndarray  # Hz, strictly increasing
    psd: np.ndarray  # one-sided density (or density / mean^2 when normalized)
    segments: int
    dt: float
    normalized: bool = False
    fitted_alpha: float | None = None
    fitted_corner: float | None = None
    fitted_plateau: float | None = None

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if np.any(self.psd < 0):
            raise ValueError("power density must be nonnegative")


class LorentzianFit(tuple):
    """(corner, plateau) with a residual_rms attribute (log10 units)."""

    def __new__(cls, corner, plateau, residual_rms):
        self = super().__new__(cls, (corner, plateau))
        self.corner = corner
        self.plateau = plateau
        self.residual_rms = residual_rms
        return self


@dataclass
class TlpMatrix:
    lag: int
    counts: np.ndarray  # 2-D histogram, x[k] along rows, x[k+lag] along cols
    x_edges: np.ndarray
    y_edges: np.ndarray
    corner_counts: dict | None = None  # HH/LL/LH/HL for two-level input

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass
class DwellTimeStats:
    mean_tau_h: float
    mean_tau_l: float
    high_dwells: np.ndarray
    low_dwells: np.ndarray

    @property
    def n_high(self):
        return int(self.high_dwells.size)

    @property
    def n_low(self):
        return int(self.low_dwells.size)


@dataclass
class EntropyReport:
    shannon_bits_per_bit: float
    block_size: int
    counts: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.shannon_bits_per_bit <= 1.0 + 1e-12:
            raise ValueError("per-bit entropy must lie in [0, 1]")


@dataclass
class AutocorrSeries:
    lags: np.ndarray
    rho: np.ndarray
    n: int
    confidence_band: float  # +-band around zero, 1.96/sqrt(n)


@dataclass
class MarkovPrediction:
    accuracy: float
    interval: tuple
    n_test: int
    order: int


# ------------------------------------------------------------------- psd


def estimate_psd(trace, segment_length=4096, overlap_fraction=0.5, window="hann",
                 normalized=False):
    """Welch one-sided PSD of a current trace.

    With ``normalized`` the density is divided by the squared mean
    current, which is how the measured spectra are usually plotted.
    """
    if window != "hann":
        raise ConfigError(f"unsupported window {window!r}")
    if segment_length & (segment_length - 1) or segment_length < 2:
        raise ConfigError("segment_length must be a power of two")
    if not 0 <= overlap_fraction < 1:
        raise ConfigError("overlap_fraction must lie in [0, 1)")
    x = trace.samples
    if x.size < segment_length:
        raise AnalysisError(
            f"trace too short for segment_length {segment_length} ({x.size} samples)"
        )
    noverlap = int(segment_length * overlap_fraction)
    freqs, psd = signal.welch(
        x,
        fs=1.0 / trace.dt,
        window=window,
        nperseg=segment_length,
        noverlap=noverlap,
        detrend="constant",
        scaling="density",
    )
    segments = 1 + (x.size - segment_length) // (segment_length - noverlap)
    if normalized:
        mean_i = x.mean()
        if mean_i == 0:
            raise AnalysisError("cannot normalize: zero mean current")
        psd = psd / mean_i**2
    return SpectrumEstimate(freqs=freqs, psd=psd, segments=segments, dt=trace.dt,
                            normalized=normalized)


def _fit_band(spec, lo_factor=4.0, hi_fraction=0.25):
    """Band [4 f_min, f_Nyquist/4]: away from DC leakage and aliasing."""
    f = spec.freqs
    positive = f[f > 0]
    lo = lo_factor * positive[0]
    hi = hi_fraction * f[-1] * 2  # f[-1] is Nyquist for one-sided grids
    mask = (f >= lo) & (f <= hi) & (spec.psd > 0)
    return mask, lo, hi


def _log_binned(f, s, per_decade=24):
    """Average a linear-grid spectrum into geometric frequency bins.

    Welch grids are linear, so a log-space fit would be dominated by
    the top octave; equal-per-decade bins rebalance it.
    """
    edges = np.geomspace(f[0], f[-1], max(int(np.log10(f[-1] / f[0]) * per_decade), 8) + 1)
    idx = np.searchsorted(edges, f, side="right") - 1
    idx = np.clip(idx, 0, edges.size - 2)
    n_bins = edges.size - 1
    counts = np.bincount(idx, minlength=n_bins)
    keep = counts > 0
    s_mean = np.bincount(idx, weights=s, minlength=n_bins)[keep] / counts[keep]
    f_geo = np.exp(np.bincount(idx, weights=np.log(f), minlength=n_bins)[keep] / counts[keep])
    return f_geo, s_mean


def fit_lorentzian(spec: SpectrumEstimate):
    """Fit plateau/(1+(f/fc)^2) to the spectrum in log10 space.

    Returns (corner, plateau) with residual RMS attached. A spectrum
    with no visible rolloff inside the fit band (white noise) is
    rejected; the raised error carries the best iterate in ``best``.
    """
    mask, band_lo, band_hi = _fit_band(spec)
    if mask.sum() < 10:
        raise AnalysisError("fit band too narrow: fewer than 10 spectral points")
    f, s = _log_binned(spec.freqs[mask], spec.psd[mask])
    logs = np.log10(s)

    plateau0 = 10.0 ** np.median(logs[: max(4, f.size // 16)])
    below = np.nonzero(s < plateau0 / 2)[0]
    fc0 = f[below[0]] if below.size else np.sqrt(f[0] * f[-1])

    def resid(theta):
        log_plateau, log_fc = theta
        return log_plateau - np.log10(1.0 + (f / 10.0**log_fc) ** 2) - logs

    res = optimize.least_squares(
        resid,
        x0=[np.log10(plateau0), np.log10(fc0)],
        bounds=([-np.inf, np.log10(f[0]) - 1.0], [np.inf, np.log10(f[-1]) + 1.0]),
    )
    corner = 10.0 ** res.x[1]
    plateau = 10.0 ** res.x[0]
    rms = float(np.sqrt(np.mean(res.fun**2)))
    fit = LorentzianFit(corner, plateau, rms)
    if not res.success:
        err = AnalysisError("Lorentzian fit did not converge")
        err.best = fit
        raise err
    if corner > 0.5 * band_hi or corner < 0.5 * band_lo:
        err = AnalysisError(
            "corner unidentifiable: no rolloff inside the fit band (flat spectrum?)"
        )
        err.best = fit
        raise err
    return fit


def fit_slope(spec: SpectrumEstimate, f_lo, f_hi):
    """Straight-line exponent alpha of S ~ 1/f^alpha over [f_lo, f_hi]."""
    mask = (spec.freqs >= f_lo) & (spec.freqs <= f_hi) & (spec.psd > 0)
    if mask.sum() < 5:
        raise AnalysisError("slope band holds fewer than 5 spectral points")
    slope, _ = np.polyfit(np.log10(spec.freqs[mask]), np.log10(spec.psd[mask]), 1)
    return -float(slope)


def characterize_spectrum(spec: SpectrumEstimate, slope_band=(3.0, 30.0)):
    """Lorentzian fit plus high-frequency exponent above the corner.

    The exponent is fitted between slope_band[0] and slope_band[1]
    corner frequencies (clipped to the spectral fit band).
    """
    fit = fit_lorentzian(spec)
    _, _, band_hi = _fit_band(spec)
    alpha = fit_slope(spec, slope_band[0] * fit.corner,
                      min(slope_band[1] * fit.corner, band_hi))
    return replace(spec, fitted_alpha=alpha, fitted_corner=fit.corner,
                   fitted_plateau=fit.plateau)


def spectrum_to_csv(spec: SpectrumEstimate, path):
    with open(path, "w") as fh:
        fh.write("frequency,psd\n")
        for fi, si in zip(spec.freqs.tolist(), spec.psd.tolist()):
            fh.write(f"{fi!r},{si!r}\n")


# ---------------------------------------------------------------- levels


@dataclass
class LevelExtraction:
    levels: np.ndarray  # uint8, 0 = LOW, 1 = HIGH
    threshold: float  # amperes
    delta_i: float  # cluster-mean separation
    noise_sigma: float


def _noise_sigma(x):
    """Robust noise scale from first differences (transition-insensitive).

    For white measurement noise the median absolute first difference is
    0.6745 * sqrt(2) * sigma; occasional level steps land in the tails
    and do not move the median.
    """
    d = np.diff(x)
    return float(np.median(np.abs(d)) / (0.6745 * np.sqrt(2.0)))


def _two_means_threshold(x, bins=512):
    """Exact two-means split of the 1-D histogram (Otsu's criterion)."""
    counts, edges = np.histogram(x, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    w = counts.astype(np.float64)
    cw = np.cumsum(w)
    cm = np.cumsum(w * centers)
    total_w, total_m = cw[-1], cm[-1]
    w0, w1 = cw[:-1], total_w - cw[:-1]
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.where(valid, cm[:-1] / np.where(w0 > 0, w0, 1.0), 0.0)
    mu1 = np.where(valid, (total_m - cm[:-1]) / np.where(w1 > 0, w1, 1.0), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -np.inf)
    k = int(np.argmax(between))
    if not np.isfinite(between[k]):
        raise AnalysisError("levels unresolvable: degenerate histogram")
    return edges[k + 1], mu0[k], mu1[k]


def extract_levels(trace, guard_sigma=0.5):
    """Two-level classification of a current trace.

    The threshold is the two-means histogram split; assignment is
    hysteretic at threshold +- guard_sigma * noise sigma so that noise
    riding on a level does not chatter across the boundary.
    """
    x = trace.samples
    sigma = _noise_sigma(x)
    _, mu0, mu1 = _two_means_threshold(x)
    delta = mu1 - mu0
    if delta < 2.0 * sigma:
        raise AnalysisError(
            f"levels unresolvable: separation {delta:.3g} A < 2 sigma ({sigma:.3g} A)"
        )
    threshold = 0.5 * (mu0 + mu1)
    upper = threshold + guard_sigma * sigma
    lower = threshold - guard_sigma * sigma
    raw = np.where(x > upper, 1, np.where(x < lower, 0, -1)).astype(np.int64)
    if raw[0] < 0:
        raw[0] = int(x[0] > threshold)
    idx = np.arange(x.size)
    defined = np.where(raw >= 0, idx, 0)
    fill = np.maximum.accumulate(defined)
    levels = raw[fill].astype(np.uint8)
    # refine the separation estimate with exact per-cluster sample means
    hi, lo = x[levels == 1], x[levels == 0]
    if hi.size and lo.size:
        delta = float(hi.mean() - lo.mean())
    return LevelExtraction(levels=levels, threshold=float(threshold),
                           delta_i=delta, noise_sigma=sigma)


def dwell_times(levels, dt):
    """Dwell durations between transitions; censored end dwells excluded."""
    lv = np.asarray(levels)
    if not dt > 0:
        raise ConfigError("dt must be positive")
    change = np.nonzero(np.diff(lv) != 0)[0]
    if change.size < 2:
        raise AnalysisError("need at least 2 transitions for dwell statistics")
    run_lengths = np.diff(change) * dt
    run_levels = lv[change[:-1] + 1]
    high = run_lengths[run_levels == 1]
    low = run_lengths[run_levels == 0]
    return DwellTimeStats(
        mean_tau_h=float(high.mean()) if high.size else float("nan"),
        mean_tau_l=float(low.mean()) if low.size else float("nan"),
        high_dwells=high,
        low_dwells=low,
    )


# ------------------------------------------------------------------- tlp


def tlp(series, lag=1, bins=64):
    """Time-lag plot: 2-D histogram of (x[k], x[k+lag]).

    For a series taking at most two distinct values the four corner
    occupation counts are reported: HH (stay high), LL (stay low),
    LH (low-to-high step), HL (high-to-low step).
    """
    x = np.asarray(series, dtype=np.float64)
    if lag < 1:
        raise ConfigError("lag must be >= 1")
    if lag >= x.size:
        raise AnalysisError(f"lag {lag} is not below series length {x.size}")
    a, b = x[:-lag], x[lag:]
    counts, x_edges, y_edges = np.histogram2d(a, b, bins=bins)
    corner = None
    uniq = np.unique(x)
    if uniq.size <= 2:
        if uniq.size == 2:
            hi_val = uniq[1]
            a_hi, b_hi = a == hi_val, b == hi_val
        else:
            a_hi = np.full(a.shape, bool(uniq[0] > 0))
            b_hi = a_hi
        corner = {
            "HH": int(np.sum(a_hi & b_hi)),
            "LL": int(np.sum(~a_hi & ~b_hi)),
            "LH": int(np.sum(~a_hi & b_hi)),
            "HL": int(np.sum(a_hi & ~b_hi)),
        }
    return TlpMatrix(lag=lag, counts=counts, x_edges=x_edges, y_edges=y_edges,
                     corner_counts=corner)


# --------------------------------------------------------------- bit side


def autocorrelation(bits: BitStream, max_lag=100):
    """Sample Pearson autocorrelation of the +-1-mapped bit sequence."""
    n = bits.length
    if n <= max_lag + 1:
        raise ConfigError(f"stream length {n} must exceed max_lag + 1")
    x = bits.bits.astype(np.float64) * 2.0 - 1.0
    if np.all(x == x[0]):
        raise AnalysisError("zero variance: constant stream has no autocorrelation")
    lags = np.arange(1, max_lag + 1)
    rho = np.empty(max_lag)
    for i, k in enumerate(lags):
        a, b = x[:-k], x[k:]
        am, bm = a - a.mean(), b - b.mean()
        denom = np.sqrt(np.sum(am**2) * np.sum(bm**2))
        rho[i] = np.sum(am * bm) / denom if denom > 0 else 0.0
    return AutocorrSeries(lags=lags, rho=rho, n=n,
                          confidence_band=1.96 / np.sqrt(n))


def shannon_entropy(bits: BitStream, block_size=8):
    """Plug-in Shannon entropy over non-overlapping blocks, per bit.

    Requires at least 100 * 2**block_size bits so every symbol has a
    fair chance of being visited (plug-in bias stays small).
    """
    if not 1 <= block_size <= 24:
        raise ConfigError("block_size must lie in 1..24")
    n = bits.length
    if n < 100 * 2**block_size:
        raise AnalysisError(
            f"need >= {100 * 2**block_size} bits for block_size {block_size}, got {n}"
        )
    n_blocks = n // block_size
    blocks = bits.bits[: n_blocks * block_size].reshape(n_blocks, block_size)
    weights = 1 << np.arange(block_size - 1, -1, -1)
    symbols = blocks @ weights
    counts = np.bincount(symbols, minlength=2**block_size)
    p = counts[counts > 0] / n_blocks
    h = float(-(p * np.log2(p)).sum() / block_size)
    return EntropyReport(shannon_bits_per_bit=min(h, 1.0), block_size=block_size,
                         counts=counts)


def bitmap_emit(bits: BitStream, width, height, path, fmt="P4"):
    """Write the first width*height bits as a portable bitmap (1 = black)."""
    need = width * height
    if width < 1 or height < 1:
        raise ConfigError("bitmap dimensions must be positive")
    if need > bits.length:
        raise AnalysisError(f"need {need} bits for {width}x{height}, have {bits.length}")
    grid = bits.bits[:need].reshape(height, width)
    if fmt == "P1":
        rows = "\n".join(" ".join(str(int(v)) for v in row) for row in grid)
        with open(path, "w") as fh:
            fh.write(f"P1\n{width} {height}\n{rows}\n")
    elif fmt == "P4":
        packed = np.packbits(grid, axis=1, bitorder="big")
        with open(path, "wb") as fh:
            fh.write(f"P4\n{width} {height}\n".encode("ascii"))
            fh.write(packed.tobytes())
    else:
        raise ConfigError(f"unknown bitmap format {fmt!r}")


def markov_predict(bits: BitStream, order=8, train_fraction=0.8):
    """Order-k Markov majority predictor; returns held-out accuracy.

    Transition frequencies come from the training prefix; each test bit
    is predicted as the majority continuation of its k-bit context
    (ties predict 1, unseen contexts fall back to the global training
    majority). The 95% interval is the normal binomial approximation.
    """
    k = order
    if not 0 <= k <= 16:
        raise ConfigError("order must lie in 0..16")
    if not 0 < train_fraction < 1:
        raise ConfigError("train_fraction must lie in (0, 1)")
    b = bits.bits
    n = b.size
    split = int(round(train_fraction * n))
    if split <= k or n - split < 1:
        raise ConfigError("split leaves no usable training contexts or test bits")
    targets = b[k:]
    if k:
        ctx = sliding_window_view(b, k)[:-1] @ (1 << np.arange(k - 1, -1, -1))
    else:
        ctx = np.zeros(targets.size, dtype=np.int64)
    n_train = split - k  # targets b[k:split]
    table = np.zeros((2**k, 2), dtype=np.int64)
    np.add.at(table, (ctx[:n_train], targets[:n_train].astype(np.int64)), 1)
    global_majority = 1 if b[:split].sum() * 2 >= split else 0
    pred_per_ctx = np.where(
        table[:, 1] > table[:, 0], 1,
        np.where(table[:, 0] > table[:, 1], 0,
                 np.where(table.sum(axis=1) > 0, 1, global_majority)),
    )
    test_ctx, test_targets = ctx[n_train:], targets[n_train:]
    hits = pred_per_ctx[test_ctx] == test_targets
    m = hits.size
    acc = float(hits.mean())
    half = 1.96 * np.sqrt(max(acc * (1 - acc), 1e-12) / m)
    return MarkovPrediction(accuracy=acc, interval=(max(0.0, acc - half),
                                                    min(1.0, acc + half)),
                            n_test=m, order=k)
