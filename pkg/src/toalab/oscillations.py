"""Time-integrated detection probabilities for oscillating particles.

The probability of detecting, at baseline L, a particle produced in flavor
beta through the channel of flavor alpha is a double time integral over the
arrival amplitudes of each mass eigenspace, weighted by a detector memory
kernel f(tau):

    P(L) = sum_ij M_ij e^{i (pbar_j - pbar_i) L}
           \\int ds ds' phi0(L - vbar_j s) phi0(L - vbar_i s')
           e^{-i (ebar_j s - ebar_i s')} f(s' - s)

with M_ij = U*_{alpha i} U_{alpha j} U_{beta i} U*_{beta j}.  A short-memory
(delta) kernel reproduces the standard oscillation wavenumber
(m_i^2 - m_j^2) / (2 pbar); an infinite-memory (constant) kernel gives the
non-standard wavenumber, twice as large at zero threshold.

The double integral is evaluated in rotated coordinates
(S, tau) = ((s + s') / 2, s' - s) so the kernel factors; the delta kernel is
resolved analytically, the constant kernel factorizes into two 1D integrals.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel
from .errors import NoPeakError, ValidationError
from .quadrature import odd_count, simpson_weights, uniform_nodes

POINTS_PER_PERIOD = 10
ENVELOPE_POINTS_PER_WIDTH = 24
MAX_AXIS_POINTS = 400_001


# ---------------------------------------------------------------------------
# envelopes

@dataclass(frozen=True)
class GaussianEnvelope:
    """phi0(x) = (pi sigma^2)^(-1/4) exp(-x^2 / 2 sigma^2), unit L2 norm."""

    sigma_x: float
    family = "gaussian"
    support_multiplier = 8.0
    points_per_width = 24.0

    def __post_init__(self):
        if not self.sigma_x > 0.0:
            raise ValidationError("envelope needs sigma_x > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (math.pi * self.sigma_x**2) ** -0.25 * np.exp(-x * x / (2.0 * self.sigma_x**2))

    def tail_mass(self, radius: float) -> float:
        """Probability mass of phi0^2 outside |x| > radius."""
        return math.erfc(max(radius, 0.0) / self.sigma_x)


@dataclass(frozen=True)
class ExponentialEnvelope:
    """phi0(x) = exp(-|x| / sigma) / sqrt(sigma), unit L2 norm.

    Heavier Fourier tails than the Gaussian: its transform decays
    algebraically, so detection amplitudes at energies well above 1 / sigma
    stay at comparable (rather than exponentially disparate) magnitudes
    across mass components.
    """

    sigma_x: float
    family = "exponential"
    support_multiplier = 16.0
    points_per_width = 96.0  # the cusp at x = 0 degrades composite rules

    def __post_init__(self):
        if not self.sigma_x > 0.0:
            raise ValidationError("envelope needs sigma_x > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.abs(x) / self.sigma_x) / math.sqrt(self.sigma_x)

    def tail_mass(self, radius: float) -> float:
        return math.exp(-2.0 * max(radius, 0.0) / self.sigma_x)


ENVELOPES = {"gaussian": GaussianEnvelope, "exponential": ExponentialEnvelope}


def envelope_from_config(cfg: dict):
    family = cfg.get("family", "gaussian")
    if family not in ENVELOPES:
        raise ValidationError(f"unknown envelope family {family!r}")
    return ENVELOPES[family](sigma_x=cfg["sigma_x"])


def envelope_table(envelope, points: int = 8193):
    """Uniform sample of phi0 over its support, for the interpolation kernels."""
    radius = envelope.support_multiplier * envelope.sigma_x
    x, dx = uniform_nodes(-radius, radius, points)
    return float(x[0]), dx, np.asarray(envelope(x), dtype=float)


def envelope_autocorrelation(envelope, shift: float, points: int = 4097) -> float:
    """phi1(shift) = \\int phi0(y) phi0(y - shift) dy, computed by quadrature.

    Equals the inverse transform of |phi0~|^2; its decay with the baseline
    sets the localization suppression of the interference terms.
    """
    radius = envelope.support_multiplier * envelope.sigma_x + abs(shift)
    n = odd_count(points)
    y, h = uniform_nodes(-radius, radius, n)
    w = simpson_weights(n, h)
    return float(np.sum(w * envelope(y) * envelope(y - shift)))


# ---------------------------------------------------------------------------
# kernels and scenario

@dataclass(frozen=True)
class DecoherenceKernel:
    """Detector memory kernel f(tau).

    * ``delta``     tau_dec -> 0: amplitudes at different arrival times add
      incoherently,
    * ``constant``  f == f0: full coherence across arrival times,
    * ``gaussian``  f(tau) = f0 exp(-tau^2 / 2 tau_dec^2): interpolates.
    """

    kind: str
    tau_dec: float | None = None
    f0: float = 1.0

    KINDS = ("delta", "constant", "gaussian")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown decoherence kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.tau_dec and self.tau_dec > 0.0):
            raise ValidationError("gaussian decoherence kernel needs tau_dec > 0")
        if self.f0 <= 0.0:
            raise ValidationError("kernel scale f0 must be positive")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "constant":
            return np.full_like(tau, self.f0)
        if self.kind == "gaussian":
            return self.f0 * np.exp(-tau * tau / (2.0 * self.tau_dec**2))
        raise ValidationError("the delta kernel has no pointwise values; it is resolved analytically")

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind == "gaussian":
            cfg["tau_dec"] = self.tau_dec
        if self.f0 != 1.0:
            cfg["f0"] = self.f0
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "DecoherenceKernel":
        return cls(kind=cfg["kind"], tau_dec=cfg.get("tau_dec"), f0=cfg.get("f0", 1.0))


@dataclass(frozen=True, eq=False)
class OscillationScenario:
    """Mass eigenspaces, mixing, mean momenta and the detector memory kernel.

    Dispersion in each eigenspace is eps_p = sqrt(p^2 + m_i^2) - threshold;
    the linearization around the mean momenta (mean energies ebar_i and group
    velocities vbar_i) is what enters the probability integrals.
    """

    masses: np.ndarray
    mixing: np.ndarray
    momenta: np.ndarray
    envelope: object
    kernel: DecoherenceKernel
    threshold: float = 0.0
    v_mean_mode: str = "arithmetic"

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        momenta = np.asarray(self.momenta, dtype=float)
        mixing = np.asarray(self.mixing, dtype=complex)
        n = len(masses)
        if n < 1 or momenta.shape != (n,):
            raise ValidationError("masses and momenta must be equal-length vectors")
        if np.any(masses < 0.0):
            raise ValidationError("masses must be non-negative")
        if np.any(momenta <= 0.0):
            raise ValidationError("mean momenta must be positive")
        if mixing.shape != (n, n):
            raise ValidationError(f"mixing matrix must be {n}x{n} (rows = flavors, columns = mass states)")
        defect = float(np.max(np.abs(mixing.conj().T @ mixing - np.eye(n))))
        if defect > 1e-10:
            raise ValidationError(f"mixing matrix must be unitary (max |U^dag U - 1| = {defect:.3e})")
        if self.v_mean_mode not in ("arithmetic", "geometric"):
            raise ValidationError(f"unknown v_mean_mode {self.v_mean_mode!r}")
        energies = np.sqrt(momenta**2 + masses**2)
        if np.any(energies - self.threshold < -1e-12):
            raise ValidationError("threshold exceeds a component energy; detection channel closed")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "momenta", momenta)
        object.__setattr__(self, "mixing", mixing)

    @property
    def n_states(self) -> int:
        return len(self.masses)

    @property
    def total_energies(self) -> np.ndarray:
        return np.sqrt(self.momenta**2 + self.masses**2)

    @property
    def energies(self) -> np.ndarray:
        """ebar_i, measured from the detection threshold."""
        return self.total_energies - self.threshold

    @property
    def velocities(self) -> np.ndarray:
        return self.momenta / self.total_energies

    def mean_velocity(self, i: int, j: int) -> float:
        vi, vj = self.velocities[i], self.velocities[j]
        if self.v_mean_mode == "geometric":
            return math.sqrt(vi * vj)
        return 0.5 * (vi + vj)

    def momentum_spread_flag(self) -> float:
        """max |pbar_i - pbar_j| / min |pbar|; << 1 required for validity."""
        p = self.momenta
        return float((p.max() - p.min()) / np.abs(p).min())

    def mixing_factor(self, detect_flavor: int, source_flavor: int) -> np.ndarray:
        u = self.mixing
        a, b = detect_flavor, source_flavor
        return (np.conj(u[a])[:, None] * u[a][None, :]
                * u[b][:, None] * np.conj(u[b])[None, :])


# ---------------------------------------------------------------------------
# closed-form wavenumbers and lengths

def standard_wavenumber(scenario: OscillationScenario, i: int, j: int,
                        form: str = "auto") -> float:
    """Oscillation wavenumber in the short-memory (delta kernel) regime.

    General form (pbar_j - pbar_i) - (ebar_j - ebar_i) / vbar; for equal mean
    momenta this reduces to (m_i^2 - m_j^2) / (2 pbar), which the "auto" form
    returns exactly in that case.
    """
    s = scenario
    if form not in ("auto", "general", "equal-momentum"):
        raise ValidationError(f"unknown standard wavenumber form {form!r}")
    equal = s.momenta[i] == s.momenta[j]
    if form == "equal-momentum" or (form == "auto" and equal):
        if not equal:
            raise ValidationError("equal-momentum form needs pbar_i == pbar_j")
        return float((s.masses[i] ** 2 - s.masses[j] ** 2) / (2.0 * s.momenta[i]))
    de = s.energies[j] - s.energies[i]
    return float((s.momenta[j] - s.momenta[i]) - de / s.mean_velocity(i, j))


def nonstandard_wavenumber(scenario: OscillationScenario, i: int, j: int,
                           form: str = "auto") -> float:
    """Oscillation wavenumber in the long-memory (constant kernel) regime.

    General form (pbar_j - pbar_i) - (ebar_j / vbar_j - ebar_i / vbar_i).
    Equal momenta: (m_i^2 - m_j^2) / pbar - (E0 / pbar) (E_i - E_j), twice
    the standard value at zero threshold.  "nonrelativistic" returns
    (m_i - m_j)(2 m - E0) / pbar with m the mean mass; "ultrarelativistic"
    returns (m_i^2 - m_j^2) / pbar * (1 - E0 / (2 pbar)).
    """
    s = scenario
    forms = ("auto", "general", "equal-momentum", "nonrelativistic", "ultrarelativistic")
    if form not in forms:
        raise ValidationError(f"unknown nonstandard wavenumber form {form!r}")
    equal = s.momenta[i] == s.momenta[j]
    if form in ("equal-momentum", "nonrelativistic", "ultrarelativistic") and not equal:
        raise ValidationError(f"the {form} form needs pbar_i == pbar_j")
    if form == "general" or (form == "auto" and not equal):
        v = s.velocities
        e = s.energies
        return float((s.momenta[j] - s.momenta[i]) - (e[j] / v[j] - e[i] / v[i]))
    p = float(s.momenta[i])
    mi, mj = float(s.masses[i]), float(s.masses[j])
    if form == "nonrelativistic":
        return (mi - mj) * (mi + mj - s.threshold) / p
    if form == "ultrarelativistic":
        return (mi * mi - mj * mj) / p * (1.0 - s.threshold / (2.0 * p))
    ei = math.sqrt(mi * mi + p * p)
    ej = math.sqrt(mj * mj + p * p)
    return (mi * mi - mj * mj) / p - (s.threshold / p) * (ei - ej)


NO_SUPPRESSION = math.inf


def localization_length(scenario: OscillationScenario, i: int, j: int) -> float:
    """L_loc = sigma_x vbar / |vbar_i - vbar_j|; interference between the two
    eigenspaces is strongly suppressed for baselines well beyond it."""
    dv = abs(scenario.velocities[i] - scenario.velocities[j])
    if dv == 0.0:
        return NO_SUPPRESSION
    return float(scenario.envelope.sigma_x * scenario.mean_velocity(i, j) / dv)


# ---------------------------------------------------------------------------
# the probability integrals

class SweepResult(NamedTuple):
    l_values: np.ndarray
    values: np.ndarray
    imag_max: float        # largest |Im| / scale of the ij sum
    clipped_mass: float    # worst-case envelope mass outside the s window


def _axis_points(span: float, max_freq: float, width: float, override,
                 points_per_width: float = ENVELOPE_POINTS_PER_WIDTH) -> int:
    if override is not None:
        return odd_count(int(override))
    density = max(max_freq * POINTS_PER_PERIOD / (2.0 * math.pi),
                  points_per_width / width)
    n = int(math.ceil(span * density)) + 1
    return odd_count(min(max(n, 129), MAX_AXIS_POINTS))


def _s_window(scenario, l_lo, l_hi):
    v = scenario.velocities
    pad = scenario.envelope.support_multiplier * scenario.envelope.sigma_x / v.min()
    return l_lo / v.max() - pad, l_hi / v.min() + pad


def _clipped_mass(scenario, s_lo, s_hi, l_values) -> float:
    """Worst-case envelope-mass defect of the s quadrature window.

    Counts both the physical mass missed by the window (inside s >= 0) and
    the unphysical early-time mass the window picks up when it extends below
    s = 0 (the analytic continuation step valid only for L >> sigma_x)."""
    env = scenario.envelope
    worst = 0.0
    for lv in (float(np.min(l_values)), float(np.max(l_values))):
        for v in scenario.velocities:
            x_lo, x_hi = lv - v * s_hi, lv - v * s_lo
            below = (0.5 * env.tail_mass(-x_lo) if x_lo <= 0.0
                     else 1.0 - 0.5 * env.tail_mass(x_lo))
            # mismatch between the window's upper edge and the true domain
            # boundary x = L (s = 0)
            edge = abs(0.5 * env.tail_mass(x_hi) - 0.5 * env.tail_mass(lv)) \
                if x_hi >= 0.0 else 1.0 - 0.5 * env.tail_mass(-x_hi) - 0.5 * env.tail_mass(lv)
            worst = max(worst, below + edge)
    return worst


def oscillation_sweep(scenario: OscillationScenario, detect_flavor: int, source_flavor: int,
                      l_values, s_points: int | None = None,
                      tau_points: int | None = None) -> SweepResult:
    """P(L) over a baseline sweep.

    The s quadrature window covers every component's classical arrival time
    padded by the envelope support; when that window dips below s = 0 the
    (negligible, checked) early-time envelope mass is reported in
    ``clipped_mass`` and the integral is taken over the full window.
    """
    s = scenario
    n_flav = s.n_states
    if not (0 <= detect_flavor < n_flav and 0 <= source_flavor < n_flav):
        raise ValidationError("flavor indices out of range")
    l_values = np.atleast_1d(np.asarray(l_values, dtype=float))
    if np.any(l_values <= 0.0):
        raise ValidationError("baselines must be positive")

    s_lo, s_hi = _s_window(s, float(l_values.min()), float(l_values.max()))
    clipped = _clipped_mass(s, s_lo, s_hi, l_values)
    if clipped > 1e-6:
        raise ValidationError(f"s window clips {clipped:.3e} of the envelope mass (limit 1e-6); "
                              "increase the baseline or reduce sigma_x")
    eps = s.energies
    vel = s.velocities
    x0, dx, table = envelope_table(s.envelope)
    max_eps = float(np.max(np.abs(eps)))
    sigma_s = s.envelope.sigma_x / float(vel.max())
    ppw = getattr(s.envelope, "points_per_width", ENVELOPE_POINTS_PER_WIDTH)

    total = np.zeros(l_values.shape[0], dtype=complex)
    scale = 0.0
    mix = s.mixing_factor(detect_flavor, source_flavor)

    if s.kernel.kind == "constant":
        n_s = _axis_points(s_hi - s_lo, max_eps, sigma_s, s_points, ppw)
        nodes, h = uniform_nodes(s_lo, s_hi, n_s)
        w = simpson_weights(n_s, h)
        amp = [
            _accel.envelope_sum(l_values, nodes, w * np.exp(-1j * eps[i] * nodes),
                                float(vel[i]), x0, dx, table)
            for i in range(n_flav)
        ]
        for i in range(n_flav):
            for j in range(n_flav):
                term = (mix[i, j] * s.kernel.f0
                        * np.exp(1j * (s.momenta[j] - s.momenta[i]) * l_values)
                        * amp[j] * np.conj(amp[i]))
                total += term
                scale = max(scale, float(np.max(np.abs(term))))
    elif s.kernel.kind == "delta":
        n_s = _axis_points(s_hi - s_lo, float(np.max(eps) - np.min(eps)), sigma_s, s_points, ppw)
        nodes, h = uniform_nodes(s_lo, s_hi, n_s)
        w = simpson_weights(n_s, h)
        for i in range(n_flav):
            for j in range(n_flav):
                cw = w * np.exp(-1j * (eps[j] - eps[i]) * nodes)
                term = _accel.envelope_pair_sum(l_values, nodes, nodes, cw,
                                                float(vel[j]), float(vel[i]), x0, dx, table)
                term = mix[i, j] * np.exp(1j * (s.momenta[j] - s.momenta[i]) * l_values) * term
                total += term
                scale = max(scale, float(np.max(np.abs(term))))
    else:  # gaussian
        tau_half = min(8.0 * s.kernel.tau_dec,
                       2.0 * s.envelope.support_multiplier * sigma_s)
        n_s = _axis_points(s_hi - s_lo, float(np.max(eps) - np.min(eps)), sigma_s, s_points, ppw)
        big_nodes, h_s = uniform_nodes(s_lo, s_hi, n_s)
        w_s = simpson_weights(n_s, h_s)
        n_tau = _axis_points(2.0 * tau_half, max_eps, min(sigma_s, s.kernel.tau_dec), tau_points, ppw)
        taus, h_tau = uniform_nodes(-tau_half, tau_half, n_tau)
        w_tau = simpson_weights(n_tau, h_tau) * s.kernel(taus)
        s_mat = (big_nodes[:, None] - 0.5 * taus[None, :]).ravel()
        sp_mat = (big_nodes[:, None] + 0.5 * taus[None, :]).ravel()
        for i in range(n_flav):
            for j in range(n_flav):
                phase = np.exp(-1j * (eps[j] * s_mat - eps[i] * sp_mat))
                cw = (np.outer(w_s, w_tau).ravel() * phase)
                term = _accel.envelope_pair_sum(l_values, s_mat, sp_mat, cw,
                                                float(vel[j]), float(vel[i]), x0, dx, table)
                term = mix[i, j] * np.exp(1j * (s.momenta[j] - s.momenta[i]) * l_values) * term
                total += term
                scale = max(scale, float(np.max(np.abs(term))))

    imag_max = float(np.max(np.abs(total.imag)) / scale) if scale > 0.0 else 0.0
    return SweepResult(l_values=l_values, values=total.real, imag_max=imag_max,
                       clipped_mass=clipped)


def oscillation_probability(scenario: OscillationScenario, detect_flavor: int,
                            source_flavor: int, baseline: float,
                            s_points: int | None = None,
                            tau_points: int | None = None) -> float:
    """P_{beta alpha}(L) at a single baseline."""
    result = oscillation_sweep(scenario, detect_flavor, source_flavor,
                               [baseline], s_points=s_points, tau_points=tau_points)
    return float(result.values[0])


# ---------------------------------------------------------------------------
# wavenumber extraction

def fit_wavenumber(l_values, p_values=None, noise_factor: float = 50.0) -> float:
    """Dominant non-zero wavenumber of a P(L) series, in radians per length.

    Periodogram of the detrended, Hann-windowed series, zero-padded four-fold,
    with parabolic interpolation of the log-power peak.  Requires at least 4
    sampled periods and 16 samples per period.
    """
    if p_values is None:
        samples = np.asarray(l_values, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise ValidationError("samples must be (L, P) pairs")
        l_values, p_values = samples[:, 0], samples[:, 1]
    l_values = np.asarray(l_values, dtype=float)
    p_values = np.asarray(p_values, dtype=float)
    n = len(l_values)
    if n < 16 or p_values.shape != (n,):
        raise ValidationError("need at least 16 (L, P) samples")
    dl = np.diff(l_values)
    if np.max(np.abs(dl - dl[0])) > 1e-9 * abs(dl[0]):
        raise ValidationError("baselines must be uniformly spaced")
    step = float(dl[0])

    y = p_values - p_values.mean()
    rms = float(np.sqrt(np.mean(y * y)))
    if rms <= 1e-13 * (abs(float(p_values.mean())) + 1e-300):
        raise NoPeakError("series is constant: no oscillation peak above the noise floor")
    window = np.hanning(n)
    n_fft = 4 * (1 << (n - 1).bit_length())
    spectrum = np.abs(np.fft.rfft(y * window, n=n_fft)) ** 2
    spectrum[0] = 0.0
    peak = int(np.argmax(spectrum))
    if peak <= 0 or peak >= len(spectrum) - 1:
        raise NoPeakError("oscillation peak at the edge of the resolvable band")
    floor = float(np.median(spectrum[1:]))
    if spectrum[peak] < noise_factor * max(floor, 1e-300):
        raise NoPeakError("no oscillation peak above the noise floor")
    logs = np.log(spectrum[peak - 1:peak + 2] + 1e-300)
    denom = logs[0] - 2.0 * logs[1] + logs[2]
    shift = 0.5 * (logs[0] - logs[2]) / denom if denom != 0.0 else 0.0
    freq = (peak + shift) / (n_fft * step)
    k = 2.0 * math.pi * freq

    span = l_values[-1] - l_values[0]
    periods = span * k / (2.0 * math.pi)
    if periods < 4.0:
        raise ValidationError(f"only {periods:.2f} oscillation periods sampled; need at least 4")
    if n / periods < 16.0:
        raise ValidationError(f"only {n / periods:.1f} samples per period; need at least 16")
    return float(k)
