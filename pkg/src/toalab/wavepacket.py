"""One-dimensional quantum states on a uniform momentum grid.

Conventions (hbar = 1 throughout):

* momentum-space measure dp / (2 pi); states are normalized as
  (1 / 2 pi) \\int dp |psi(p)|^2 = 1,
* position wave function psi(x) = (1 / 2 pi) \\int dp psi(p) e^{i p x},
* the induced position grid spans 2 pi / dp with the same number of samples,
  so the momentum <-> position transform is an exact FFT pair.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform momentum grid with a power-of-two node count."""

    p_min: float
    p_max: float
    n_points: int

    def __post_init__(self):
        if not self.p_max > self.p_min:
            raise ValidationError(f"momentum grid needs p_min < p_max, got [{self.p_min}, {self.p_max}]")
        n = self.n_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValidationError(f"momentum grid size must be a power of two, got {n}")

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_points

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_points)

    @property
    def dx(self) -> float:
        return TWO_PI / (self.n_points * self.dp)

    @property
    def x(self) -> np.ndarray:
        # centered position window of total length 2 pi / dp
        return -math.pi / self.dp + self.dx * np.arange(self.n_points)


class WavePacket:
    """State amplitudes psi(p) on a :class:`MomentumGrid`, unit-normalized."""

    def __init__(self, grid: MomentumGrid, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape != (grid.n_points,):
            raise ValidationError(f"amplitudes shape {amps.shape} does not match grid size {grid.n_points}")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValidationError("amplitudes contain non-finite entries")
        raw = float(np.sum(np.abs(amps) ** 2) * grid.dp / TWO_PI)
        if raw <= 0.0:
            raise ValidationError("cannot normalize a zero state")
        self.grid = grid
        self.amplitudes = amps / math.sqrt(raw)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dp / TWO_PI)

    def mean_momentum(self) -> float:
        w = np.abs(self.amplitudes) ** 2
        return float(np.sum(self.grid.p * w) / np.sum(w))

    def momentum_variance(self) -> float:
        w = np.abs(self.amplitudes) ** 2
        mean = np.sum(self.grid.p * w) / np.sum(w)
        return float(np.sum((self.grid.p - mean) ** 2 * w) / np.sum(w))

    def negative_momentum_fraction(self) -> float:
        """Fraction of the norm carried by nodes with p <= 0."""
        w = np.abs(self.amplitudes) ** 2
        total = float(np.sum(w))
        return float(np.sum(w[self.grid.p <= 0.0]) / total)

    def require_positive_support(self, tol: float = 1e-8) -> None:
        frac = self.negative_momentum_fraction()
        if frac > tol:
            raise ValidationError(f"state has {frac:.3e} of its norm at p <= 0 (limit {tol:.1e})")

    def support_indices(self, rel_cut: float = 1e-12) -> np.ndarray:
        """Indices where |psi| exceeds rel_cut times its maximum."""
        mags = np.abs(self.amplitudes)
        return np.nonzero(mags > rel_cut * mags.max())[0]

    def to_position(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample psi(x) on the induced position grid."""
        g = self.grid
        k = np.arange(g.n_points)
        # psi(x_j) = (dp / 2 pi) e^{i p_min x_j} sum_k [psi_k e^{i k dp x_min}] e^{2 pi i j k / n}
        x_min = -math.pi / g.dp
        inner = self.amplitudes * np.exp(1j * k * g.dp * x_min)
        psi_x = (g.dp / TWO_PI) * g.n_points * np.fft.ifft(inner)
        psi_x *= np.exp(1j * g.p_min * g.x)
        return g.x, psi_x

    @classmethod
    def from_position(cls, grid: MomentumGrid, psi_x) -> "WavePacket":
        """Inverse of :meth:`to_position` on the same grid."""
        psi_x = np.asarray(psi_x, dtype=complex)
        x_min = -math.pi / grid.dp
        inner = np.fft.fft(psi_x * np.exp(-1j * grid.p_min * grid.x))
        k = np.arange(grid.n_points)
        amps = inner * np.exp(-1j * k * grid.dp * x_min) * (TWO_PI / (grid.dp * grid.n_points))
        return cls(grid, amps)

    def position_mean(self) -> float:
        x, psi_x = self.to_position()
        w = np.abs(psi_x) ** 2
        return float(np.sum(x * w) / np.sum(w))

    def write_csv(self, path) -> None:
        from .io import write_csv
        write_csv(path, ["p", "re_psi", "im_psi"],
                  [self.grid.p, self.amplitudes.real, self.amplitudes.imag])

    @classmethod
    def read_csv(cls, path, grid: MomentumGrid) -> "WavePacket":
        from .io import read_csv
        header, data = read_csv(path)
        if header != ["p", "re_psi", "im_psi"] or data.shape[0] != grid.n_points:
            raise ValidationError(f"{path}: not a wave-packet CSV for this grid")
        if np.max(np.abs(data[:, 0] - grid.p)) > 1e-9 * grid.dp:
            raise ValidationError(f"{path}: momentum column does not match the grid")
        return cls(grid, data[:, 1] + 1j * data[:, 2])

    def to_json_dict(self) -> dict:
        from .io import complex_to_pairs
        return {"grid": {"p_min": self.grid.p_min, "p_max": self.grid.p_max,
                         "n_points": self.grid.n_points},
                "amplitudes": complex_to_pairs(self.amplitudes)}

    @classmethod
    def from_json_dict(cls, payload: dict) -> "WavePacket":
        from .io import pairs_to_complex
        g = payload["grid"]
        grid = MomentumGrid(g["p_min"], g["p_max"], g["n_points"])
        return cls(grid, pairs_to_complex(payload["amplitudes"], "amplitudes"))


@dataclass(frozen=True)
class Dispersion:
    """Energy-momentum relation with analytic derivatives.

    kinds:
      * ``nonrelativistic``   eps = p^2 / (2 m)
      * ``relativistic``      eps = sqrt(p^2 + m^2)
      * ``threshold-shifted`` eps = sqrt(p^2 + m^2) - threshold
    """

    kind: str
    mass: float
    threshold: float = 0.0

    KINDS = ("nonrelativistic", "relativistic", "threshold-shifted")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown dispersion kind {self.kind!r}, expected one of {self.KINDS}")
        if not self.mass > 0.0:
            raise ValidationError("dispersion needs mass > 0")
        if self.kind != "threshold-shifted" and self.threshold != 0.0:
            raise ValidationError(f"{self.kind} dispersion takes no threshold")

    def energy(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "nonrelativistic":
            return p * p / (2.0 * self.mass)
        return np.sqrt(p * p + self.mass**2) - self.threshold

    def velocity(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "nonrelativistic":
            return p / self.mass
        return p / np.sqrt(p * p + self.mass**2)

    def velocity_derivative(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "nonrelativistic":
            return np.full_like(p, 1.0 / self.mass)
        e = np.sqrt(p * p + self.mass**2)
        return self.mass**2 / e**3

    def velocity_second_derivative(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "nonrelativistic":
            return np.zeros_like(p)
        e = np.sqrt(p * p + self.mass**2)
        return -3.0 * p * self.mass**2 / e**5

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "mass": self.mass}
        if self.kind == "threshold-shifted":
            cfg["threshold"] = self.threshold
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "Dispersion":
        return cls(cfg["kind"], cfg["mass"], cfg.get("threshold", 0.0))


@dataclass
class MixedState:
    """Statistical mixture of wave packets with weights summing to one."""

    components: list = field(default_factory=list)

    def __post_init__(self):
        if not self.components:
            raise ValidationError("mixed state needs at least one component")
        total = 0.0
        for weight, packet in self.components:
            if weight < 0.0:
                raise ValidationError("mixture weights must be non-negative")
            if not isinstance(packet, WavePacket):
                raise ValidationError("mixture components must be WavePacket instances")
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"mixture weights sum to {total:.12g}, expected 1")


def gaussian_packet(grid: MomentumGrid, p0: float, dp: float, x0: float = 0.0) -> WavePacket:
    """Normalized Gaussian packet with mean momentum p0, spread dp, centre x0."""
    if dp <= 0.0:
        raise ValidationError("gaussian packet needs dp > 0")
    if not (grid.p_min <= p0 - 5.0 * dp and p0 + 5.0 * dp <= grid.p_max):
        raise ValidationError(f"packet support p0 +- 5 dp = [{p0 - 5 * dp}, {p0 + 5 * dp}] "
                              f"exceeds grid [{grid.p_min}, {grid.p_max}]")
    # analytic norm fraction clipped by the grid boundary
    lo = (grid.p_min - p0) / (math.sqrt(2.0) * dp)
    hi = (grid.p_max - p0) / (math.sqrt(2.0) * dp)
    clipped = 0.5 * (math.erfc(hi) + math.erfc(-lo))
    if clipped > 1e-8:
        raise ValidationError(f"grid boundary clips {clipped:.3e} of the packet norm (limit 1e-8)")
    p = grid.p
    amps = np.exp(-((p - p0) ** 2) / (4.0 * dp * dp) - 1j * p * x0)
    return WavePacket(grid, amps)


def evolve(state: WavePacket, dispersion: Dispersion, t: float) -> WavePacket:
    """Free evolution: multiply amplitudes by e^{-i eps(p) t}."""
    phase = np.exp(-1j * dispersion.energy(state.grid.p) * t)
    out = WavePacket.__new__(WavePacket)
    out.grid = state.grid
    out.amplitudes = state.amplitudes * phase  # exact phase, norm untouched
    return out


@dataclass(frozen=True)
class PhaseSpaceField:
    """Real field W(x, p) sampled on uniform x and p nodes (shape n_x by n_p)."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.x), len(self.p)):
            raise ValidationError("phase-space field shape must be (n_x, n_p)")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 1.0

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0]) if len(self.p) > 1 else 1.0


def wigner(state: WavePacket, x_nodes, p_nodes) -> PhaseSpaceField:
    """Wigner function of a wave packet.

    W(x, p) = \\int (d xi / 2 pi) e^{-i x xi} psi*(p + xi/2) psi(p - xi/2)

    with marginals \\int dx W = |psi(p)|^2 and (1 / 2 pi) \\int dp W = |psi(x)|^2.
    The orientation (sign of the Fourier kernel) is fixed so that the symbol of
    the arrival operator reduces to the classical transport form, i.e. a packet
    centred at +x0 yields a field centred at +x0.

    p_nodes must coincide with momentum-grid nodes; x_nodes may be arbitrary
    points inside the induced position window.
    """
    g = state.grid
    x_nodes = np.asarray(x_nodes, dtype=float)
    p_nodes = np.asarray(p_nodes, dtype=float)
    # xi samples are spaced 2 dp, so the transform is x-periodic with period
    # pi / dp; only half of that window is alias-free
    if np.max(np.abs(x_nodes)) > 0.5 * math.pi / g.dp:
        raise ValidationError("x nodes fall outside the resolvable phase-space window "
                              f"|x| <= {0.5 * math.pi / g.dp:.6g}")
    idx_f = (p_nodes - g.p_min) / g.dp
    idx = np.rint(idx_f).astype(int)
    if np.max(np.abs(idx_f - idx)) > 1e-9 or idx.min() < 0 or idx.max() >= g.n_points:
        raise ValidationError("p nodes must coincide with momentum-grid nodes")

    amps = state.amplitudes
    support = state.support_indices(rel_cut=1e-16)
    m_max = int(support[-1] - support[0]) if len(support) else 0
    m = np.arange(-m_max, m_max + 1)

    # A[k, m] = psi*(p_k + m dp) psi(p_k - m dp), zero-padded off the grid
    n = g.n_points
    plus = idx[:, None] + m[None, :]
    minus = idx[:, None] - m[None, :]
    valid = (plus >= 0) & (plus < n) & (minus >= 0) & (minus < n)
    a = np.zeros((len(idx), len(m)), dtype=complex)
    a[valid] = np.conj(amps[plus[valid]]) * amps[minus[valid]]

    # W = (dp / pi) Re sum_m A[k, m] e^{-2 i x m dp}
    kernel = np.exp(-2j * g.dp * np.outer(x_nodes, m))
    values = (g.dp / math.pi) * np.real(kernel @ a.T)
    return PhaseSpaceField(x=x_nodes, p=p_nodes, values=values)
