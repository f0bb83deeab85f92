"""Detector-model kernels <p'|S(L)|p> and absorption coefficients.

Three kernel families are implemented in closed form:

* ``coherent``   detection creates a long-lived particle-like excitation of
  effective mass mu_star above an energy gap E0, localized to delta,
* ``decoherent`` the excitation is strongly coupled to the remaining detector
  degrees of freedom (diffusion constant D), so momentum off-diagonals are
  suppressed,
* ``energy``     detection proceeds through the excitation of detector levels
  with density of states w(E).

All kernels are hermitian with real, L-independent diagonals, so each model
defines an absorption coefficient alpha(p) = <p|S(L)|p> / |v_p|.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularKernelError, ValidationError
from .wavepacket import Dispersion

SQRT2_PI = math.sqrt(2.0) * math.pi


@dataclass(frozen=True)
class CouplingFunction:
    """Momentum-space coupling u(p) between particle and detector.

    Families: ``constant``, ``gaussian`` (window exp(-(p - center)^2 / 2 width^2)),
    ``powerlaw`` (amplitude * p^exponent on p > 0) and ``tabulated``.  A linear
    phase slope adds exp(i slope p); whether the phase enters a kernel is the
    detector model's choice.
    """

    family: str = "constant"
    amplitude: float = 1.0
    center: float = 0.0
    width: float | None = None
    exponent: float = 0.0
    table: tuple | None = None  # (p values, complex u values)
    phase_slope: float = 0.0

    FAMILIES = ("constant", "gaussian", "powerlaw", "tabulated")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValidationError(f"unknown coupling family {self.family!r}")
        if self.family == "gaussian" and not (self.width and self.width > 0.0):
            raise ValidationError("gaussian coupling needs width > 0")
        if self.family == "tabulated":
            if self.table is None or len(self.table) != 2:
                raise ValidationError("tabulated coupling needs (p, u) arrays")

    def magnitude(self, p):
        p = np.asarray(p, dtype=float)
        if self.family == "constant":
            return np.full_like(p, self.amplitude)
        if self.family == "gaussian":
            return self.amplitude * np.exp(-((p - self.center) ** 2) / (2.0 * self.width**2))
        if self.family == "powerlaw":
            return self.amplitude * np.power(np.abs(p), self.exponent)
        pk, uk = self.table
        return np.interp(p, np.asarray(pk, float), np.abs(np.asarray(uk, complex)))

    def __call__(self, p, drop_phase: bool = False):
        mag = self.magnitude(p)
        if drop_phase or self.phase_slope == 0.0:
            return mag.astype(complex)
        return mag * np.exp(1j * self.phase_slope * np.asarray(p, dtype=float))

    def energy_resolved(self, p, energy, drop_phase: bool = False):
        """u(p, E) for the energy-absorption model; defaults to u(p)."""
        return self(p, drop_phase=drop_phase)

    def to_config(self) -> dict:
        cfg = {"family": self.family, "amplitude": self.amplitude}
        if self.family == "gaussian":
            cfg.update(center=self.center, width=self.width)
        if self.family == "powerlaw":
            cfg["exponent"] = self.exponent
        if self.phase_slope:
            cfg["phase_slope"] = self.phase_slope
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "CouplingFunction":
        return cls(family=cfg.get("family", "constant"),
                   amplitude=cfg.get("amplitude", 1.0),
                   center=cfg.get("center", 0.0),
                   width=cfg.get("width"),
                   exponent=cfg.get("exponent", 0.0),
                   phase_slope=cfg.get("phase_slope", 0.0))


@dataclass(frozen=True)
class DensityOfStates:
    """Detector density of states w(E) >= 0 for the energy model."""

    family: str = "constant"
    value: float = 1.0
    exponent: float = 0.0

    def __call__(self, energy):
        e = np.asarray(energy, dtype=float)
        if self.family == "constant":
            return np.full_like(e, self.value)
        if self.family == "powerlaw":
            return self.value * np.power(np.clip(e, 0.0, None), self.exponent)
        raise ValidationError(f"unknown density-of-states family {self.family!r}")

    def to_config(self) -> dict:
        cfg = {"family": self.family, "value": self.value}
        if self.family == "powerlaw":
            cfg["exponent"] = self.exponent
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "DensityOfStates":
        return cls(family=cfg.get("family", "constant"),
                   value=cfg.get("value", 1.0),
                   exponent=cfg.get("exponent", 0.0))


@dataclass(frozen=True)
class DetectorModel:
    """One detector kernel family plus its physical parameters.

    ``prefactor`` selects the coherent-model normalization: "half-sum" keeps
    the exact 1 / sqrt((eps + eps') / 2 - E0) energy factor; "geometric-mean"
    applies the (eps eps')^(1/4) approximation valid for E0 << eps, which also
    rescales the overall constant by 1 / sqrt(2).  Only conditioned densities
    and ratios are physically compared across normalizations.
    """

    kind: str
    coupling: CouplingFunction = field(default_factory=CouplingFunction)
    distance: float = 0.0
    mu_star: float = 1.0
    gap: float = 0.0            # E0, energy required to create the excitation
    delta: float = 0.1          # position sampling width
    diffusion: float = 1.0      # D, decoherent model only
    density_of_states: DensityOfStates = field(default_factory=DensityOfStates)
    drop_coupling_phase: bool = False
    prefactor: str = "half-sum"
    p_cutoff: float = 1e-9      # kernels are undefined within this band around p = 0

    KINDS = ("coherent", "decoherent", "energy")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown detector kind {self.kind!r}")
        if self.delta <= 0.0:
            raise ValidationError("detector needs delta > 0")
        if self.kind in ("coherent", "decoherent") and self.mu_star <= 0.0:
            raise ValidationError("detector needs mu_star > 0")
        if self.kind == "decoherent" and self.diffusion <= 0.0:
            raise ValidationError("decoherent detector needs diffusion constant D > 0")
        if self.prefactor not in ("half-sum", "geometric-mean"):
            raise ValidationError(f"unknown prefactor convention {self.prefactor!r}")

    # -- regime diagnostics (reported, not enforced) --

    def coherent_validity(self, energy) -> float:
        """max of eps * mu_star * delta^2 over the given energies; << 1 required."""
        return float(np.max(np.asarray(energy) * self.mu_star * self.delta**2))

    def decoherent_regime(self) -> float:
        """D / mu_star; >> 1 is the strong-coupling regime of this kernel."""
        return self.diffusion / self.mu_star

    def decoherence_time(self) -> float:
        """tau_dec = mu_star^2 delta^2 / D, the kernel's memory time."""
        return self.mu_star**2 * self.delta**2 / self.diffusion

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "delta": self.delta, "distance": self.distance,
               "coupling": self.coupling.to_config()}
        if self.kind == "coherent":
            cfg.update(mu_star=self.mu_star, E0=self.gap, prefactor=self.prefactor)
        elif self.kind == "decoherent":
            cfg.update(mu_star=self.mu_star, D=self.diffusion)
        else:
            cfg["density_of_states"] = self.density_of_states.to_config()
        if self.drop_coupling_phase:
            cfg["drop_coupling_phase"] = True
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "DetectorModel":
        return cls(kind=cfg["kind"],
                   coupling=CouplingFunction.from_config(cfg.get("coupling", {})),
                   distance=cfg.get("distance", 0.0),
                   mu_star=cfg.get("mu_star", 1.0),
                   gap=cfg.get("E0", 0.0),
                   delta=cfg["delta"],
                   diffusion=cfg.get("D", 1.0),
                   density_of_states=DensityOfStates.from_config(cfg.get("density_of_states", {})),
                   drop_coupling_phase=cfg.get("drop_coupling_phase", False),
                   prefactor=cfg.get("prefactor", "half-sum"))


@dataclass(frozen=True)
class AbsorptionCoefficient:
    """alpha(p): fraction of momentum-p particles absorbed per unit length."""

    fn: object
    label: str = "alpha"

    def __call__(self, p):
        out = np.asarray(self.fn(np.asarray(p, dtype=float)), dtype=float)
        if np.any(out < 0.0):
            raise ValidationError(f"{self.label} produced negative values")
        return out

    @classmethod
    def constant(cls, value: float = 1.0) -> "AbsorptionCoefficient":
        return cls(fn=lambda p: np.full_like(np.asarray(p, float), value),
                   label=f"alpha={value}")


def _check_momenta(model: DetectorModel, p, pprime):
    p = np.asarray(p, dtype=float)
    pprime = np.asarray(pprime, dtype=float)
    if np.any(np.abs(p) <= model.p_cutoff) or np.any(np.abs(pprime) <= model.p_cutoff):
        raise SingularKernelError(f"kernel evaluated inside the excluded band |p| <= {model.p_cutoff}")
    return p, pprime


def kernel_coherent(model: DetectorModel, p, pprime, dispersion: Dispersion):
    """<p'|S(L)|p> for the coherent-excitation model."""
    if model.kind != "coherent":
        raise ValidationError("kernel_coherent needs a coherent model")
    p, pp = _check_momenta(model, p, pprime)
    eps, epsp = dispersion.energy(p), dispersion.energy(pp)
    u = model.coupling(p, drop_phase=model.drop_coupling_phase)
    up = model.coupling(pp, drop_phase=model.drop_coupling_phase)
    cutoff = np.exp(-0.5 * model.delta**2 * (p * p + pp * pp))
    phase = np.exp(1j * (p - pp) * model.distance)
    if model.prefactor == "half-sum":
        mean = 0.5 * (eps + epsp) - model.gap
        if np.any(mean <= 0.0):
            bad = np.argwhere(np.atleast_1d(mean) <= 0.0)
            pair = (np.atleast_1d(p)[tuple(bad[0])] if np.ndim(p) else p,
                    np.atleast_1d(pp)[tuple(bad[0])] if np.ndim(pp) else pp)
            raise SingularKernelError(f"mean energy at or below threshold E0={model.gap} "
                                      f"for (p, p') = {pair}")
        front = math.sqrt(math.pi * model.mu_star * model.delta**2) / np.sqrt(mean)
    else:
        # geometric-mean approximation, E0 dropped from the energy factor
        front = math.sqrt(0.5 * math.pi * model.mu_star * model.delta**2) / (eps * epsp) ** 0.25
    return front * u * np.conj(up) * cutoff * phase


def kernel_decoherent(model: DetectorModel, p, pprime):
    """<p'|S(L)|p> for the decoherent-excitation (strong-coupling) model."""
    if model.kind != "decoherent":
        raise ValidationError("kernel_decoherent needs a decoherent model")
    p, pp = _check_momenta(model, p, pprime)
    s = p + pp
    if np.any(np.abs(s) <= model.p_cutoff):
        raise SingularKernelError("kernel singular at p + p' = 0")
    u = model.coupling(p, drop_phase=model.drop_coupling_phase)
    up = model.coupling(pp, drop_phase=model.drop_coupling_phase)
    front = 4.0 * model.mu_star**2 / (model.diffusion * s * s)
    damp = np.exp(-0.25 * model.delta**2 * (p - pp) ** 2)
    phase = np.exp(1j * (p - pp) * model.distance)
    return front * u * np.conj(up) * damp * phase


def kernel_energy(model: DetectorModel, p, pprime, dispersion: Dispersion):
    """<p'|S(L)|p> for the energy-absorption model."""
    if model.kind != "energy":
        raise ValidationError("kernel_energy needs an energy model")
    p, pp = _check_momenta(model, p, pprime)
    e_mean = 0.5 * (dispersion.energy(p) + dispersion.energy(pp))
    w = np.asarray(model.density_of_states(e_mean), dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0.0):
        raise SingularKernelError("density of states undefined or negative at the sampled energy")
    u = model.coupling.energy_resolved(p, e_mean, drop_phase=model.drop_coupling_phase)
    up = model.coupling.energy_resolved(pp, e_mean, drop_phase=model.drop_coupling_phase)
    damp = np.exp(-0.25 * model.delta**2 * (p - pp) ** 2)
    phase = np.exp(1j * (p - pp) * model.distance)
    return SQRT2_PI * damp * w * u * np.conj(up) * phase


def kernel_element(model: DetectorModel, p, pprime, dispersion: Dispersion | None = None):
    """Dispatch <p'|S(L)|p> on the model kind."""
    if model.kind == "coherent":
        return kernel_coherent(model, p, pprime, dispersion)
    if model.kind == "decoherent":
        return kernel_decoherent(model, p, pprime)
    return kernel_energy(model, p, pprime, dispersion)


def kernel_matrix(model: DetectorModel, momenta, dispersion: Dispersion | None = None) -> np.ndarray:
    """Matrix S[i, j] = <p_i|S(L)|p_j> over a momentum sample."""
    p = np.asarray(momenta, dtype=float)
    bra, ket = np.meshgrid(p, p, indexing="ij")
    return np.asarray(kernel_element(model, ket, bra, dispersion), dtype=complex)


def absorption(model: DetectorModel, dispersion: Dispersion) -> AbsorptionCoefficient:
    """Closed-form alpha(p) of the model; equals diagonal kernel / |v_p|."""

    def coherent_alpha(p):
        eps = dispersion.energy(p)
        mean = eps - model.gap
        if np.any(mean <= 0.0):
            raise SingularKernelError(f"energy at or below threshold E0={model.gap}")
        mag2 = model.coupling.magnitude(p) ** 2
        cutoff = np.exp(-model.delta**2 * p * p)
        if model.prefactor == "half-sum":
            front = math.sqrt(math.pi * model.mu_star * model.delta**2) / np.sqrt(mean)
        else:
            front = math.sqrt(0.5 * math.pi * model.mu_star * model.delta**2) / np.sqrt(eps)
        return front * mag2 * cutoff / np.abs(dispersion.velocity(p))

    def decoherent_alpha(p):
        mag2 = model.coupling.magnitude(p) ** 2
        return model.mu_star**2 * mag2 / (model.diffusion * np.abs(dispersion.velocity(p)) * p * p)

    def energy_alpha(p):
        eps = dispersion.energy(p)
        w = np.asarray(model.density_of_states(eps), dtype=float)
        mag2 = np.abs(model.coupling.energy_resolved(p, eps)) ** 2
        return SQRT2_PI * w * mag2 / np.abs(dispersion.velocity(p))

    fn = {"coherent": coherent_alpha, "decoherent": decoherent_alpha, "energy": energy_alpha}[model.kind]

    def guarded(p):
        p = np.asarray(p, dtype=float)
        if np.any(np.abs(p) <= model.p_cutoff):
            raise SingularKernelError(f"alpha undefined inside the excluded band |p| <= {model.p_cutoff}")
        return fn(p)

    return AbsorptionCoefficient(fn=guarded, label=f"alpha[{model.kind}]")
