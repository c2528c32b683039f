"""Coincidence-histogram synthesis and analysis.

Histograms are binned coincidence counts versus detector time difference
tau (ps).  Peaks repeat at multiples of the laser repetition period; a
pulse-pair experiment adds satellites at +-delta_t around every repetition
peak.  Peak areas are integrated in a window of +-window_ps around each
expected center after subtracting a flat background estimated from the
inter-peak region.

The intensity autocorrelation at zero delay is estimated as the ratio of
the central peak area to the mean side-peak area.  Two-photon interference
visibility is 1 - A0/A_ref, where A_ref is the central-peak area expected
for fully distinguishable photons; the default A_ref is half the mean of
the +-delta_t satellite areas (pulse-pair excitation with 50/50 splitting),
and the estimator is injectable.  Both are pure count ratios, so uniform
count rescaling leaves them unchanged.

Laser leakage under resonant excitation shows up as a flat coincidence
floor; the background subtraction above is also how that leakage would be
removed, via the background_per_bin knob of the generator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .emitter import DecayParams

#: 76 MHz repetition rate
DEFAULT_REP_PERIOD_NS = 1000.0 / 76.0


class WindowOverlap(ValueError):
    """Integration windows of neighboring peaks collide."""


class NoSidePeaks(ValueError):
    """Fewer than three repetition side peaks inside the histogram."""


class UnresolvedCluster(ValueError):
    """Pulse-pair separation too small for the binning to resolve."""


@dataclass(frozen=True)
class CoincidenceHistogram:
    bin_width_ps: float
    taus_ps: np.ndarray
    counts: np.ndarray
    rep_period_ns: float = DEFAULT_REP_PERIOD_NS
    pulse_pair_sep_ns: float | None = None

    def __post_init__(self):
        taus = np.asarray(self.taus_ps, dtype=float)
        counts = np.asarray(self.counts)
        if self.bin_width_ps <= 0:
            raise ValueError("bin_width_ps must be positive")
        if taus.shape != counts.shape or taus.ndim != 1:
            raise ValueError("taus and counts must be equal-length 1-D arrays")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "taus_ps", taus)
        object.__setattr__(self, "counts", counts)

    @property
    def total_counts(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class PeakIntegral:
    center_ps: float
    window_ps: float
    area: float
    is_central: bool
    raw_counts: float = 0.0  # pre-subtraction counts, for Poisson errors


@dataclass(frozen=True)
class HbtModel:
    """Single-detector-pair autocorrelation with central suppression g2."""

    g2: float

    def __post_init__(self):
        if self.g2 < 0:
            raise ValueError("g2 must be nonnegative")


@dataclass(frozen=True)
class HomModel:
    """Pulse-pair interference with visibility V and separation delta_t."""

    visibility: float
    pulse_sep_ns: float

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if self.pulse_sep_ns <= 0:
            raise ValueError("pulse_sep_ns must be positive")


def _peak_centers_ps(rep_period_ns, pulse_pair_sep_ns, tau_min, tau_max):
    rep_ps = rep_period_ns * 1000.0
    kmax = int(np.floor(max(abs(tau_min), abs(tau_max)) / rep_ps))
    centers = []
    offsets = [0.0]
    if pulse_pair_sep_ns is not None:
        sep_ps = pulse_pair_sep_ns * 1000.0
        offsets = [-sep_ps, 0.0, sep_ps]
    for k in range(-kmax, kmax + 1):
        for off in offsets:
            c = k * rep_ps + off
            if tau_min <= c <= tau_max:
                centers.append(c)
    return sorted(centers)


def _shape_pdf(x_ps: np.ndarray, p: DecayParams) -> np.ndarray:
    """Two-sided emission profile as a unit-area density in tau.

    Mirrors the beating decay in tau; with zero splitting it degrades to the
    plain two-sided exponential (the beat factor would null the profile).
    """
    ax = np.abs(x_ps)
    envelope = np.exp(-ax / p.t1_ps)
    if p.delta_inv_ps == 0:
        return envelope / (2.0 * p.t1_ps)
    d2 = (p.delta_inv_ps * p.t1_ps) ** 2
    norm = 2.0 * p.t1_ps * d2 / (1.0 + d2)
    return envelope * (1.0 - np.cos(p.delta_inv_ps * ax)) / norm


def expected_histogram(
    model,
    decay: DecayParams,
    total_counts: float,
    *,
    bin_width_ps: float = 20.0,
    rep_period_ns: float = DEFAULT_REP_PERIOD_NS,
    n_side: int = 3,
    background_per_bin: float = 0.0,
):
    """Pre-sampling expected counts per bin for a synthetic experiment.

    Returns (taus, lam, histogram-metadata kwargs).  Peak weights: every
    repetition peak carries weight 1 in the autocorrelation model with the
    central one scaled by g2; in the pulse-pair model side clusters carry
    (1, 2, 1) at offsets (-dt, 0, +dt) and the central cluster
    (1, (1 - V)/2, 1), so the interfering peak sits at (1 - V) times half
    the satellite mean.
    """
    rep_ps = rep_period_ns * 1000.0
    half_span = (n_side + 0.5) * rep_ps
    nbins = int(np.ceil(2.0 * half_span / bin_width_ps))
    taus = (np.arange(nbins) - (nbins - 1) / 2.0) * bin_width_ps

    peaks = []  # (center_ps, weight)
    pulse_sep = None
    if isinstance(model, HbtModel):
        for k in range(-n_side, n_side + 1):
            peaks.append((k * rep_ps, model.g2 if k == 0 else 1.0))
    elif isinstance(model, HomModel):
        pulse_sep = model.pulse_sep_ns
        sep_ps = pulse_sep * 1000.0
        for k in range(-n_side, n_side + 1):
            mid = 2.0 if k != 0 else 0.5 * (1.0 - model.visibility)
            peaks.append((k * rep_ps - sep_ps, 1.0))
            peaks.append((k * rep_ps, mid))
            peaks.append((k * rep_ps + sep_ps, 1.0))
    else:
        raise TypeError(f"model must be HbtModel or HomModel, got {type(model)!r}")

    wsum = sum(w for _, w in peaks)
    lam = np.zeros_like(taus)
    for center, w in peaks:
        if w > 0:
            lam += (total_counts / wsum) * w * _shape_pdf(taus - center, decay) * bin_width_ps
    lam += background_per_bin
    meta = dict(
        bin_width_ps=bin_width_ps,
        rep_period_ns=rep_period_ns,
        pulse_pair_sep_ns=pulse_sep,
    )
    return taus, lam, meta


def synth_histogram(
    model,
    decay: DecayParams,
    total_counts: int,
    seed: int,
    **kwargs,
) -> CoincidenceHistogram:
    """Poisson-sampled synthetic coincidence histogram, deterministic per seed."""
    if total_counts <= 0:
        raise ValueError("total_counts must be positive")
    taus, lam, meta = expected_histogram(model, decay, float(total_counts), **kwargs)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam)
    return CoincidenceHistogram(taus_ps=taus, counts=counts, **meta)


def poisson_resample(h: CoincidenceHistogram, n: int, seed: int) -> list[CoincidenceHistogram]:
    """n independent histograms with each bin redrawn ~ Poisson(counts)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(
            CoincidenceHistogram(
                bin_width_ps=h.bin_width_ps,
                taus_ps=h.taus_ps,
                counts=rng.poisson(h.counts),
                rep_period_ns=h.rep_period_ns,
                pulse_pair_sep_ns=h.pulse_pair_sep_ns,
            )
        )
    return out


def integrate_peaks(h: CoincidenceHistogram, window_ps: float) -> list[PeakIntegral]:
    """Background-subtracted area of every expected peak.

    The window is a half-width: bins with |tau - center| <= window_ps count
    toward a peak.  The flat background per bin is the median of all bins
    farther than one window from every center.
    """
    if window_ps <= 0:
        raise ValueError("window_ps must be positive")
    rep_ps = h.rep_period_ns * 1000.0
    if not window_ps < rep_ps / 2.0:
        raise ValueError("window must be smaller than half the repetition period")
    centers = _peak_centers_ps(
        h.rep_period_ns, h.pulse_pair_sep_ns, h.taus_ps[0], h.taus_ps[-1]
    )
    gaps = np.diff(centers)
    if len(gaps) and gaps.min() < 2.0 * window_ps:
        raise WindowOverlap(
            f"centers {gaps.min():.0f} ps apart overlap at window {window_ps:.0f} ps"
        )

    dist = np.min(np.abs(h.taus_ps[:, None] - np.asarray(centers)[None, :]), axis=1)
    outside = dist > window_ps
    background = float(np.median(h.counts[outside])) if outside.any() else 0.0

    out = []
    for c in centers:
        mask = np.abs(h.taus_ps - c) <= window_ps
        raw = float(h.counts[mask].sum())
        area = max(raw - background * int(mask.sum()), 0.0)
        out.append(
            PeakIntegral(
                center_ps=c,
                window_ps=window_ps,
                area=area,
                is_central=abs(c) < 0.5 * h.bin_width_ps,
                raw_counts=raw,
            )
        )
    return out


def _rep_peaks_only(peaks, rep_ps):
    """Peaks sitting on repetition multiples, excluding pulse-pair satellites."""
    out = []
    for p in peaks:
        k = round(p.center_ps / rep_ps)
        if abs(p.center_ps - k * rep_ps) < 1e-6 * rep_ps + 1e-9:
            out.append(p)
    return out


def g2_zero(h: CoincidenceHistogram, window_ps: float = 2000.0):
    """Central-to-side peak area ratio with a propagated Poisson error.

    Returns (g2, sigma).  Requires at least three side peaks.
    """
    rep_ps = h.rep_period_ns * 1000.0
    peaks = integrate_peaks(h, window_ps)
    rep_peaks = _rep_peaks_only(peaks, rep_ps)
    central = [p for p in rep_peaks if p.is_central]
    sides = [p for p in rep_peaks if not p.is_central]
    if len(sides) < 3:
        raise NoSidePeaks(f"need >= 3 side peaks, found {len(sides)}")
    if not central:
        raise ValueError("no central peak inside the histogram")
    a0 = central[0].area
    var0 = central[0].raw_counts
    side_mean = float(np.mean([p.area for p in sides]))
    var_side_mean = float(np.sum([p.raw_counts for p in sides])) / len(sides) ** 2
    value = a0 / side_mean
    sigma = np.sqrt(var0 / side_mean ** 2 + (a0 * np.sqrt(var_side_mean) / side_mean ** 2) ** 2)
    return value, float(sigma)


def half_satellite_mean(central: PeakIntegral, satellites: list[PeakIntegral]) -> float:
    """Default distinguishable-photon reference: half the satellite mean area."""
    return 0.5 * float(np.mean([p.area for p in satellites]))


def hom_visibility(h: CoincidenceHistogram, window_ps: float = 600.0, a_ref_estimator=None):
    """Two-photon interference visibility from the central coincidence cluster.

    Returns (V, sigma).  a_ref_estimator(central_peak, satellite_peaks) may
    replace the default half-satellite-mean reference.
    """
    if h.pulse_pair_sep_ns is None:
        raise ValueError("histogram has no pulse_pair_sep_ns metadata")
    sep_ps = h.pulse_pair_sep_ns * 1000.0
    if sep_ps < 3.0 * h.bin_width_ps:
        raise UnresolvedCluster(
            f"pulse separation {sep_ps:.0f} ps below 3 bins ({3 * h.bin_width_ps:.0f} ps)"
        )
    peaks = integrate_peaks(h, window_ps)
    central = next(p for p in peaks if p.is_central)
    satellites = [p for p in peaks if abs(abs(p.center_ps) - sep_ps) < 0.5 * h.bin_width_ps]
    if len(satellites) != 2:
        raise ValueError(f"expected the two +-delta_t satellites, found {len(satellites)}")
    estimator = a_ref_estimator or half_satellite_mean
    a_ref = float(estimator(central, satellites))
    if a_ref <= 0:
        raise ValueError("reference area is zero; cannot form a visibility")
    value = 1.0 - central.area / a_ref
    var_ref = 0.25 * float(np.sum([p.raw_counts for p in satellites])) / len(satellites) ** 2
    sigma = np.sqrt(
        central.raw_counts / a_ref ** 2 + (central.area / a_ref ** 2) ** 2 * var_ref
    )
    return float(value), float(sigma)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def write_histogram_csv(csv_path, meta_path, h: CoincidenceHistogram) -> None:
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_ps", "counts"])
        for tau, c in zip(h.taus_ps, h.counts):
            w.writerow([repr(float(tau)), int(c)])
    meta = {
        "bin_width_ps": h.bin_width_ps,
        "rep_period_ns": h.rep_period_ns,
        "pulse_pair_sep_ns": h.pulse_pair_sep_ns,
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_histogram_csv(csv_path, meta_path) -> CoincidenceHistogram:
    with open(meta_path) as fh:
        meta = json.load(fh)
    taus, counts = [], []
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][:2] != ["tau_ps", "counts"]:
        raise ValueError(f"{csv_path}: expected header tau_ps,counts")
    for row in rows[1:]:
        if not row:
            continue
        taus.append(float(row[0]))
        counts.append(int(row[1]))
    return CoincidenceHistogram(
        bin_width_ps=float(meta["bin_width_ps"]),
        taus_ps=np.asarray(taus),
        counts=np.asarray(counts),
        rep_period_ns=float(meta["rep_period_ns"]),
        pulse_pair_sep_ns=(
            None if meta.get("pulse_pair_sep_ns") is None else float(meta["pulse_pair_sep_ns"])
        ),
    )
