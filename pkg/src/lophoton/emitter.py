"""Emitter physics: beating decay profile, oscillator strength, and the
temperature/delay dependence of two-photon interference visibility.

Units convention:
  * time in picoseconds, rates in 1/ps (tau_c and pulse delays in ns where
    noted, since spectral diffusion lives on a much slower scale);
  * the phonon integration variable v is an angular frequency in 1/ps;
  * temperature enters through k_B/hbar = 0.13093 (1/ps)/K, baked in below;
  * fine-structure splittings quoted in ueV convert via hbar = 6.582e-4 eV ps.

The visibility model combines a Lorentzian coherence factor
(Gamma/2) / (Gamma/2 + gamma_virtual + gamma_diffusion) with the squared
filtered zero-phonon-line weight [B^2 / (B^2 + F (1 - B^2))]^2, where B is
the Franck-Condon factor of a super-ohmic phonon coupling with Gaussian
cutoff.  The virtual-phonon integrand uses the squared cutoff
exp(-2 v^2 / v_c^2), as required by its (v^5)^2 matrix-element structure.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants as sc
from scipy import integrate, optimize

#: k_B / hbar in (1/ps) per kelvin
KB_OVER_HBAR = 0.13093
#: hbar in eV ps
HBAR_EV_PS = 6.582119569e-4


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class FitDiverged(RuntimeError):
    """Least squares terminated without converging."""


class InsufficientData(ValueError):
    """Too few samples for the requested fit."""


class Infeasible(ValueError):
    """Target visibility exceeds what the model allows."""


def fss_ueV_to_inv_ps(ueV: float) -> float:
    """Fine-structure splitting: micro-eV to angular frequency in 1/ps."""
    return ueV * 1e-6 / HBAR_EV_PS


def inv_ps_to_ueV(omega: float) -> float:
    return omega * HBAR_EV_PS * 1e6


def wavelength_nm_to_angular_frequency(lambda_nm: float) -> float:
    """Emission wavelength in nm to angular frequency in rad/s."""
    return 2.0 * np.pi * sc.c / (lambda_nm * 1e-9)


@dataclass(frozen=True)
class DecayParams:
    """Lifetime and fine-structure beat frequency of the emitter."""

    t1_ps: float
    delta_inv_ps: float

    def __post_init__(self):
        if self.t1_ps <= 0:
            raise ValueError("t1_ps must be positive")
        if self.delta_inv_ps < 0:
            raise ValueError("delta_inv_ps must be nonnegative")

    @property
    def beat_period_ps(self) -> float:
        """Period of the self-interference oscillation, 2*pi/delta."""
        if self.delta_inv_ps == 0:
            return np.inf
        return 2.0 * np.pi / self.delta_inv_ps


@dataclass(frozen=True)
class DephasingParams:
    """Parameters of the visibility model; field names carry the units."""

    alpha_ps2: float = 0.0055
    v_c_inv_ps: float = 4.9
    mu_ps2: float = 2.2e-3
    F: float = 0.3
    T1_ps: float = 350.0
    Gamma_sd_inv_ps: float = 0.0
    tau_c_ns: float = 350.0

    def __post_init__(self):
        if self.alpha_ps2 < 0 or self.mu_ps2 < 0 or self.Gamma_sd_inv_ps < 0:
            raise ValueError("coupling parameters must be nonnegative")
        if self.v_c_inv_ps <= 0 or self.T1_ps <= 0 or self.tau_c_ns <= 0:
            raise ValueError("v_c_inv_ps, T1_ps and tau_c_ns must be positive")
        if not 0.0 <= self.F <= 1.0:
            raise ValueError("F must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "DephasingParams":
        return cls(**d)

    def replace(self, **kw) -> "DephasingParams":
        d = asdict(self)
        d.update(kw)
        return DephasingParams(**d)


@dataclass(frozen=True)
class OscillatorInputs:
    """Inputs for the emission-rate-based oscillator strength."""

    t1_ps: float
    omega_rad_per_s: float
    refractive_index: float = 3.5
    purcell_factor: float = 1.0

    def __post_init__(self):
        for name in ("t1_ps", "omega_rad_per_s", "refractive_index", "purcell_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# time-resolved decay profile
# ---------------------------------------------------------------------------

def _decay_shape(t_ps: np.ndarray, p: DecayParams) -> np.ndarray:
    # |exp(-i d t - t/2T1) - exp(-t/2T1)|^2 = 2 exp(-t/T1) (1 - cos d t)
    out = np.zeros_like(t_ps, dtype=float)
    pos = t_ps >= 0
    tp = t_ps[pos]
    out[pos] = 2.0 * np.exp(-tp / p.t1_ps) * (1.0 - np.cos(p.delta_inv_ps * tp))
    return out


def _decay_shape_peak(p: DecayParams) -> float:
    # f(t + period) = exp(-period/T1) f(t), so the global max sits in the
    # first oscillation period.
    if p.delta_inv_ps == 0:
        return 0.0
    res = optimize.minimize_scalar(
        lambda t: -_decay_shape(np.array([t]), p)[0],
        bounds=(0.0, p.beat_period_ps),
        method="bounded",
        options={"xatol": 1e-10 * p.beat_period_ps},
    )
    return float(-res.fun)


def trpl_intensity(t_ps, p: DecayParams):
    """Self-interference decay profile, normalized to unit peak.

    Zero at t = 0 (the two fine-structure amplitudes cancel) and for all
    t < 0; identically zero when the splitting vanishes.
    """
    t = np.atleast_1d(np.asarray(t_ps, dtype=float))
    peak = _decay_shape_peak(p)
    out = _decay_shape(t, p) / peak if peak > 0 else np.zeros_like(t)
    return out if np.ndim(t_ps) else float(out[0])


def trpl_model(t_ps, p: DecayParams, amplitude: float, irf_fwhm_ps: float = 0.0):
    """Decay profile scaled by an amplitude and blurred by a Gaussian IRF.

    irf_fwhm_ps is the full width at half maximum of the instrument
    response; zero means no convolution.
    """
    t = np.asarray(t_ps, dtype=float)
    if irf_fwhm_ps <= 0:
        return amplitude * _decay_shape(t, p)
    sigma = irf_fwhm_ps / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    step = min(sigma / 4.0, p.t1_ps / 40.0)
    lo = min(float(t.min()), 0.0) - 6.0 * sigma
    hi = float(t.max()) + 6.0 * sigma
    grid = np.arange(lo, hi + step, step)
    prof = _decay_shape(grid, p)
    half = int(np.ceil(5.0 * sigma / step))
    kx = np.arange(-half, half + 1) * step
    kernel = np.exp(-0.5 * (kx / sigma) ** 2)
    kernel /= kernel.sum()
    conv = np.convolve(prof, kernel, mode="same")
    return amplitude * np.interp(t, grid, conv)


@dataclass(frozen=True)
class TrplFit:
    params: DecayParams
    amplitude: float
    rms_residual: float


def fit_trpl(t_ps, intensity, irf_fwhm_ps: float = 75.0, init: DecayParams | None = None) -> TrplFit:
    """Least-squares fit of the beating decay model to a measured trace.

    Free parameters are (T1, splitting, amplitude); the instrument response
    width is supplied, not fitted.  Requires at least 20 samples spanning at
    least twice the initial lifetime guess.
    """
    t = np.asarray(t_ps, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise InsufficientData("t and intensity must be equal-length 1-D arrays")
    if t.size < 20:
        raise InsufficientData(f"need >= 20 samples, got {t.size}")
    p0 = init or DecayParams(t1_ps=350.0, delta_inv_ps=fss_ueV_to_inv_ps(6.4))
    if t.max() - t.min() < 2.0 * p0.t1_ps:
        raise InsufficientData("samples must span at least twice the initial T1")

    scale = max(float(y.max()), 1e-30)

    def residuals(x):
        t1, delta, amp = x
        return trpl_model(t, DecayParams(t1, delta), amp, irf_fwhm_ps) - y

    x0 = np.array([p0.t1_ps, p0.delta_inv_ps, 0.5 * scale])
    res = optimize.least_squares(
        residuals,
        x0,
        bounds=([1e-3, 0.0, 0.0], [np.inf, np.inf, np.inf]),
        x_scale=[p0.t1_ps, max(p0.delta_inv_ps, 1e-4), scale],
        max_nfev=20000,
    )
    if res.status <= 0:
        raise FitDiverged(f"least_squares status {res.status}: {res.message}")
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    return TrplFit(DecayParams(res.x[0], res.x[1]), float(res.x[2]), rms)


# ---------------------------------------------------------------------------
# oscillator strength
# ---------------------------------------------------------------------------

def oscillator_strength(inputs: OscillatorInputs) -> float:
    """Emission rate relative to an ideal harmonic oscillator.

    f = 6 pi eps0 m0 c^3 / (n T1 F_p omega^2 e^2), CODATA constants.
    """
    t1_s = inputs.t1_ps * 1e-12
    num = 6.0 * np.pi * sc.epsilon_0 * sc.m_e * sc.c ** 3
    den = (
        inputs.refractive_index
        * t1_s
        * inputs.purcell_factor
        * inputs.omega_rad_per_s ** 2
        * sc.e ** 2
    )
    return num / den


# ---------------------------------------------------------------------------
# phonon / spectral-diffusion visibility model
# ---------------------------------------------------------------------------

def _quad(f, a: float, b: float, rel_tol: float):
    out = integrate.quad(f, a, b, epsabs=1e-300, epsrel=rel_tol, limit=200, full_output=1)
    if len(out) > 3:
        raise QuadratureFailure(str(out[3]))
    return out[0], out[1]


def franck_condon_factor(temperature_K: float, p: DephasingParams, rel_tol: float = 1e-8) -> float:
    """Zero-phonon-line weight B in (0, 1].

    B = exp(-(alpha/2) Int v exp(-(v/v_c)^2) coth(v / 2 kT) dv) with kT in
    1/ps units; coth -> 1 at T = 0, where the integral is v_c^2/2 exactly.
    """
    if temperature_K < 0:
        raise ValueError("temperature must be >= 0")
    if p.alpha_ps2 == 0:
        return 1.0
    vc = p.v_c_inv_ps
    if temperature_K == 0:
        return float(np.exp(-p.alpha_ps2 * vc ** 2 / 4.0))
    kt = KB_OVER_HBAR * temperature_K

    def integrand(v):
        if v <= 0:
            return 2.0 * kt  # v coth(v/2kT) -> 2kT
        return v * np.exp(-((v / vc) ** 2)) / np.tanh(v / (2.0 * kt))

    val, _ = _quad(integrand, 0.0, 8.0 * vc, rel_tol)
    return float(np.exp(-0.5 * p.alpha_ps2 * val))


def virtual_phonon_rate(temperature_K: float, p: DephasingParams, rel_tol: float = 1e-8) -> float:
    """Pure-dephasing rate from virtual phonon scattering, in 1/ps.

    (alpha^2 mu / v_c^4) Int v^10 exp(-2 (v/v_c)^2) n(v)[n(v)+1] dv with the
    Bose occupation n; identically zero at T = 0.  The upper limit widens
    with sqrt(kT/v_c) so the thermally shifted integrand stays covered.
    """
    if temperature_K < 0:
        raise ValueError("temperature must be >= 0")
    if temperature_K == 0 or p.alpha_ps2 == 0 or p.mu_ps2 == 0:
        return 0.0
    vc = p.v_c_inv_ps
    kt = KB_OVER_HBAR * temperature_K
    upper = 8.0 * vc * max(1.0, np.sqrt(kt / vc))

    def integrand(v):
        if v <= 0:
            return 0.0
        x = v / kt
        if x > 700.0:  # occupation underflows
            return 0.0
        n = 1.0 / np.expm1(x)
        return v ** 10 * np.exp(-2.0 * (v / vc) ** 2) * n * (n + 1.0)

    val, _ = _quad(integrand, 0.0, upper, rel_tol)
    return float(p.alpha_ps2 ** 2 * p.mu_ps2 / vc ** 4 * val)


def spectral_diffusion_rate(delay_ns: float, p: DephasingParams) -> float:
    """Charge-noise dephasing rate in 1/ps at photon separation delay_ns.

    Grows from zero as 1 - exp(-(delay/tau_c)^2) and saturates at the
    ceiling rate.
    """
    if delay_ns < 0:
        raise ValueError("delay must be >= 0")
    return p.Gamma_sd_inv_ps * (1.0 - np.exp(-((delay_ns / p.tau_c_ns) ** 2)))


def sideband_factor(temperature_K: float, p: DephasingParams, rel_tol: float = 1e-8) -> float:
    """Squared filtered ZPL weight [B^2 / (B^2 + F (1 - B^2))]^2."""
    b2 = franck_condon_factor(temperature_K, p, rel_tol) ** 2
    return float((b2 / (b2 + p.F * (1.0 - b2))) ** 2)


def tpi_visibility(
    temperature_K: float, delay_ns: float, p: DephasingParams, rel_tol: float = 1e-8
) -> float:
    """Two-photon interference visibility at a temperature and pulse delay."""
    gamma_half = 0.5 / p.T1_ps
    g_vp = virtual_phonon_rate(temperature_K, p, rel_tol)
    g_sd = spectral_diffusion_rate(delay_ns, p)
    first = gamma_half / (gamma_half + g_vp + g_sd)
    return float(first * sideband_factor(temperature_K, p, rel_tol))


def solve_sd_ceiling(
    v_long: float,
    delay_ns: float,
    temperature_K: float,
    p: DephasingParams,
    rel_tol: float = 1e-8,
) -> float:
    """Invert the visibility model for the spectral-diffusion ceiling rate.

    Given a measured visibility at long pulse separation, solves for the
    Gamma_sd that reproduces it at (temperature_K, delay_ns), holding every
    other parameter of p fixed.  Raises Infeasible when v_long exceeds the
    Gamma_sd = 0 visibility.
    """
    if not 0.0 < v_long <= 1.0:
        raise ValueError("v_long must lie in (0, 1]")
    gamma_half = 0.5 / p.T1_ps
    g_vp = virtual_phonon_rate(temperature_K, p, rel_tol)
    side = sideband_factor(temperature_K, p, rel_tol)
    ceiling = gamma_half / (gamma_half + g_vp) * side
    if v_long > ceiling + 1e-15:
        raise Infeasible(f"v_long={v_long} exceeds zero-diffusion visibility {ceiling}")
    g_sd = gamma_half * (side / v_long - 1.0) - g_vp
    shape = 1.0 - np.exp(-((delay_ns / p.tau_c_ns) ** 2))
    if shape <= 0:
        raise Infeasible("delay too short: diffusion has not turned on yet")
    return float(max(g_sd, 0.0) / shape)


# ---------------------------------------------------------------------------
# curve fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VisibilityFit:
    params: DephasingParams
    rms_residual: float


_VS_T_FREE = ("alpha_ps2", "v_c_inv_ps", "mu_ps2", "F")
_VS_DT_FREE = ("Gamma_sd_inv_ps", "tau_c_ns")
_FIT_BOUNDS = {
    "alpha_ps2": (0.0, 1.0),
    "v_c_inv_ps": (0.1, 50.0),
    "mu_ps2": (0.0, 1.0),
    "F": (0.0, 1.0),
    "Gamma_sd_inv_ps": (0.0, 1.0),
    "tau_c_ns": (1.0, 1e6),
}


def fit_visibility_curve(
    x,
    visibility,
    which: str,
    fixed: DephasingParams,
    init: dict | None = None,
    temperature_K: float = 4.0,
    rel_tol: float = 1e-8,
) -> VisibilityFit:
    """Bounded least squares of the visibility model against a curve.

    which = "vs_temperature": x is temperature in K, the phonon parameters
    (alpha, v_c, mu, F) float and spectral diffusion is ignored (fast-delay
    regime).  which = "vs_delay": x is the pulse separation in ns at fixed
    temperature_K, and (Gamma_sd, tau_c) float.  Starting values come from
    init or from the corresponding fields of `fixed`.
    """
    xs = np.asarray(x, dtype=float)
    vs = np.asarray(visibility, dtype=float)
    if xs.shape != vs.shape or xs.ndim != 1:
        raise InsufficientData("x and visibility must be equal-length 1-D arrays")
    if xs.size < 4:
        raise InsufficientData(f"need >= 4 points, got {xs.size}")
    if which == "vs_temperature":
        free = _VS_T_FREE
    elif which == "vs_delay":
        free = _VS_DT_FREE
    else:
        raise ValueError(f"which must be 'vs_temperature' or 'vs_delay', got {which!r}")

    init = dict(init or {})
    x0, lo, hi = [], [], []
    for name in free:
        x0.append(init.get(name, getattr(fixed, name)))
        b = _FIT_BOUNDS[name]
        lo.append(b[0])
        hi.append(b[1])

    def params_for(vec):
        return fixed.replace(**dict(zip(free, vec)))

    if which == "vs_temperature":

        def residuals(vec):
            p = params_for(vec).replace(Gamma_sd_inv_ps=0.0)
            return np.array([tpi_visibility(t, 0.0, p, rel_tol) for t in xs]) - vs

    else:

        def residuals(vec):
            p = params_for(vec)
            # temperature fixed: evaluate the phonon factors once per step
            gamma_half = 0.5 / p.T1_ps
            g_vp = virtual_phonon_rate(temperature_K, p, rel_tol)
            side = sideband_factor(temperature_K, p, rel_tol)
            g_sd = np.array([spectral_diffusion_rate(d, p) for d in xs])
            return gamma_half / (gamma_half + g_vp + g_sd) * side - vs

    res = optimize.least_squares(
        residuals,
        np.array(x0, dtype=float),
        bounds=(lo, hi),
        x_scale=[max(abs(v), 1e-6) for v in x0],
        max_nfev=5000,
    )
    if res.status <= 0:
        raise FitDiverged(f"least_squares status {res.status}: {res.message}")
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    return VisibilityFit(params_for(res.x), rms)


# ---------------------------------------------------------------------------
# pulsed-excitation detection probability
# ---------------------------------------------------------------------------

def rabi_curve(sqrt_power, sqrt_power_pi: float):
    """Excited-state detection probability vs sqrt of excitation power.

    Pulse area is linear in the field amplitude: area = pi at sqrt_power_pi,
    and P = sin^2(area/2) peaks there and vanishes at the 2*pi pulse.
    """
    if sqrt_power_pi <= 0:
        raise ValueError("sqrt_power_pi must be positive")
    s = np.asarray(sqrt_power, dtype=float)
    return np.sin(0.5 * np.pi * s / sqrt_power_pi) ** 2


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def read_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column CSV with one header row."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InsufficientData(f"{path}: no data rows")
    for row in rows[1:]:
        if not row:
            continue
        xs.append(float(row[0]))
        ys.append(float(row[1]))
    return np.asarray(xs), np.asarray(ys)


def write_xy_csv(path, header: tuple[str, str], x, y) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for xi, yi in zip(x, y):
            w.writerow([repr(float(xi)), repr(float(yi))])
