"""Finite-dimensional transition-time machinery.

A transition is a jump between two complementary subspaces of a Hilbert
space: Q projects onto the "nothing happened yet" subspace, P = 1 - Q onto
the accessible states once the event is realized, and a family of positive
outcome operators P_lambda (summing to P) labels what was recorded.

The chain is: restricted (Zeno) propagator -> class operators -> two-time
correlation traces -> interval probabilities, consistency diagnostics, a
smeared POVM and transition densities.

An optional ``dephasing_time`` damps two-time correlators with a Gaussian
envelope in t - t'.  This mimics tracing out an environment that scrambles
the relative phase of amplitude branches separated in time, which is what
makes the coarse-grained probabilities additive; a strictly unitary
finite-dimensional model has quasi-periodic correlators and never dephases.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ValidationError
from .io import complex_to_pairs, pairs_to_complex
from .linalg import (expm_from_eig, hermitize, matrix_power_int, max_abs, require_density,
                     require_hermitian, require_projector, sqrtm_positive)
from .quadrature import odd_count, simpson_weights, uniform_nodes

MAX_DIMENSION = 256


@dataclass(frozen=True)
class SmearingKernel:
    """Gaussian time-smearing profile f_sigma and its factorized pair g_sigma.

    f_sigma(s) = exp(-s^2 / 2 sigma^2) / sqrt(2 pi sigma^2) integrates to one,
    and sqrt(f(t-s) f(t-s')) = f(t - (s+s')/2) g(s - s') holds pointwise with
    g_sigma(s) = exp(-s^2 / 8 sigma^2).  ``truncation`` sets how many sigma the
    quadrature windows extend.
    """

    sigma: float
    family: str = "gaussian"
    truncation: float = 6.0

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValidationError(f"unsupported smearing family {self.family!r}")
        if not self.sigma > 0.0:
            raise ValidationError("smearing kernel needs sigma > 0")
        if not self.truncation > 0.0:
            raise ValidationError("smearing kernel needs truncation > 0")

    def f(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(-s * s / (2.0 * self.sigma**2)) / math.sqrt(2.0 * math.pi * self.sigma**2)

    def sqrt_f(self, s):
        return np.sqrt(self.f(s))

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(-s * s / (8.0 * self.sigma**2))


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """Hamiltonian, subspace split, outcome family and initial state.

    ``initial_support`` selects where the initial state is assumed to live:
    "pre-transition" projects rho0 onto range(Q) (the state has not yet made
    the transition; this is the default), "post-transition" projects onto
    range(P), "free" leaves rho0 untouched.

    ``h0``/``h_int`` optionally split the Hamiltonian into a part commuting
    with the projector plus a perturbing coupling, enabling the perturbative
    class operators.
    """

    hamiltonian: np.ndarray
    projector: np.ndarray
    outcomes: dict
    rho0: np.ndarray
    h0: np.ndarray | None = None
    h_int: np.ndarray | None = None
    dephasing_time: float | None = None
    exclusive_outcomes: bool = True
    initial_support: str = "pre-transition"
    atol: float = 1e-10

    def __post_init__(self):
        h = require_hermitian(self.hamiltonian, self.atol, "hamiltonian")
        if h.shape[0] > MAX_DIMENSION:
            raise ValidationError(f"dimension {h.shape[0]} exceeds the supported maximum {MAX_DIMENSION}")
        p = require_projector(self.projector, self.atol, "projector_P")
        if p.shape != h.shape:
            raise ValidationError("projector and hamiltonian dimensions disagree")
        if not self.outcomes:
            raise ValidationError("outcome family is empty: sum of outcome operators must equal projector_P")
        outcome_sum = np.zeros_like(h)
        checked = {}
        for label, op in self.outcomes.items():
            a = require_hermitian(op, self.atol, f"outcome {label!r}")
            low = float(np.linalg.eigvalsh(a)[0])
            if low < -1e-12:
                raise ValidationError(f"outcome {label!r} has negative eigenvalue {low:.3e}")
            checked[label] = a
            outcome_sum = outcome_sum + a
        defect = max_abs(outcome_sum - p)
        if defect > self.atol:
            raise ValidationError("sum of outcome operators must equal projector_P "
                                  f"(max defect {defect:.3e})")
        if self.exclusive_outcomes:
            labels = list(checked)
            for i, la in enumerate(labels):
                for lb in labels[i + 1:]:
                    cross = max_abs(checked[la] @ checked[lb])
                    if cross > self.atol:
                        raise ValidationError(f"outcomes {la!r} and {lb!r} are not exclusive "
                                              f"(max |P_a P_b| = {cross:.3e})")
        rho = require_density(self.rho0, name="rho0")
        if self.initial_support not in ("pre-transition", "post-transition", "free"):
            raise ValidationError(f"unknown initial_support mode {self.initial_support!r}")
        if self.initial_support != "free":
            proj = (np.eye(h.shape[0]) - p) if self.initial_support == "pre-transition" else p
            projected = hermitize(proj @ rho @ proj)
            weight = float(np.real(np.trace(projected)))
            if weight <= 1e-12:
                raise ValidationError(f"rho0 has no weight in the {self.initial_support} subspace")
            rho = projected / weight
        if self.dephasing_time is not None and not self.dephasing_time > 0.0:
            raise ValidationError("dephasing_time must be positive when given")
        if (self.h0 is None) != (self.h_int is None):
            raise ValidationError("h0 and h_int must be supplied together")
        if self.h0 is not None:
            h0 = require_hermitian(self.h0, self.atol, "h0")
            h1 = require_hermitian(self.h_int, self.atol, "h_int")
            if max_abs(h0 + h1 - h) > self.atol:
                raise ValidationError("h0 + h_int does not reproduce the hamiltonian")
            comm = max_abs(h0 @ p - p @ h0)
            if comm > self.atol:
                raise ValidationError(f"[h0, projector_P] = {comm:.3e} violates the "
                                      "commuting-split requirement")
            object.__setattr__(self, "h0", h0)
            object.__setattr__(self, "h_int", h1)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "projector", p)
        object.__setattr__(self, "outcomes", checked)
        object.__setattr__(self, "rho0", rho)
        object.__setattr__(self, "_cache", {})

    # -- derived pieces, cached --

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def q(self) -> np.ndarray:
        return np.eye(self.dim) - self.projector

    def _eig(self, which: str):
        cache = self._cache
        if which not in cache:
            m = self.hamiltonian if which == "h" else self.h0
            cache[which] = np.linalg.eigh(m)
        return cache[which]

    def _sqrt_outcome(self, label) -> np.ndarray:
        cache = self._cache
        key = ("sqrt", label)
        if key not in cache:
            if label not in self.outcomes:
                raise ValidationError(f"unknown outcome label {label!r}")
            cache[key] = sqrtm_positive(self.outcomes[label], 1e-12, f"outcome {label!r}")
        return cache[key]

    def _rho_components(self):
        cache = self._cache
        if "rho" not in cache:
            w, v = np.linalg.eigh(self.rho0)
            keep = w > 1e-14
            cache["rho"] = (w[keep], v[:, keep])
        return cache["rho"]

    def dephasing_envelope(self, dt):
        if self.dephasing_time is None:
            return np.ones_like(np.asarray(dt, dtype=float))
        dt = np.asarray(dt, dtype=float)
        return np.exp(-dt * dt / (2.0 * self.dephasing_time**2))

    # -- serialization --

    def to_json_dict(self) -> dict:
        payload = {"hamiltonian": complex_to_pairs(self.hamiltonian),
                   "projector_P": complex_to_pairs(self.projector),
                   "outcomes": {k: complex_to_pairs(v) for k, v in self.outcomes.items()},
                   "rho0": complex_to_pairs(self.rho0),
                   "exclusive_outcomes": self.exclusive_outcomes,
                   "initial_support": self.initial_support}
        if self.h0 is not None:
            payload["h0"] = complex_to_pairs(self.h0)
            payload["h_int"] = complex_to_pairs(self.h_int)
        if self.dephasing_time is not None:
            payload["dephasing_time"] = self.dephasing_time
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TransitionSystem":
        known = {"hamiltonian", "projector_P", "outcomes", "rho0", "h0", "h_int",
                 "dephasing_time", "exclusive_outcomes", "initial_support"}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"unknown system fields: {sorted(unknown)}")
        for req in ("hamiltonian", "projector_P", "outcomes", "rho0"):
            if req not in payload:
                raise ValidationError(f"system is missing required field {req!r}")
        return cls(hamiltonian=pairs_to_complex(payload["hamiltonian"], "hamiltonian"),
                   projector=pairs_to_complex(payload["projector_P"], "projector_P"),
                   outcomes={k: pairs_to_complex(v, f"outcome {k!r}")
                             for k, v in payload["outcomes"].items()},
                   rho0=pairs_to_complex(payload["rho0"], "rho0"),
                   h0=pairs_to_complex(payload["h0"], "h0") if "h0" in payload else None,
                   h_int=pairs_to_complex(payload["h_int"], "h_int") if "h_int" in payload else None,
                   dephasing_time=payload.get("dephasing_time"),
                   exclusive_outcomes=payload.get("exclusive_outcomes", True),
                   initial_support=payload.get("initial_support", "pre-transition"))


class RestrictedPropagator(NamedTuple):
    matrix: np.ndarray
    convergence: float  # max-abs difference between the N-step and 2N-step products


def _restricted_matrix(system: TransitionSystem, t: float, steps: int) -> np.ndarray:
    w, v = system._eig("h")
    q = system.q
    step = q @ expm_from_eig(w, v, -1j * t / steps) @ q
    return matrix_power_int(step, steps)


def restricted_propagator(system: TransitionSystem, t: float, steps: int = 4096) -> RestrictedPropagator:
    """Propagator restricted to the no-transition subspace.

    Returns the finite product (Q e^{-i H t / N} Q)^N together with a
    convergence estimate against the doubled step count; the exact object is
    the N -> infinity (quantum Zeno) limit Q e^{-i Q H Q t} Q.
    """
    if steps < 1:
        raise ValidationError("restricted propagator needs steps >= 1")
    if not math.isfinite(t):
        raise ValidationError("time must be finite")
    coarse = _restricted_matrix(system, t, steps)
    fine = _restricted_matrix(system, t, 2 * steps)
    return RestrictedPropagator(matrix=coarse, convergence=max_abs(coarse - fine))


def zeno_propagator(system: TransitionSystem, t: float) -> np.ndarray:
    """Closed-form limit of the restricted propagator: Q e^{-i Q H Q t} Q."""
    q = system.q
    w, v = np.linalg.eigh(hermitize(q @ system.hamiltonian @ q))
    return q @ expm_from_eig(w, v, -1j * t) @ q


def class_operator_exact(system: TransitionSystem, label, t: float, steps: int = 4096) -> np.ndarray:
    """Class operator e^{i H t} sqrt(P_lambda) H S_t with the finite-step S_t."""
    root = system._sqrt_outcome(label)
    w, v = system._eig("h")
    s_t = _restricted_matrix(system, t, steps)
    return expm_from_eig(w, v, 1j * t) @ root @ system.hamiltonian @ s_t


def class_operator_perturbative(system: TransitionSystem, label, t: float) -> np.ndarray:
    """Leading-order class operator e^{i H0 t} sqrt(P_lambda) H_int e^{-i H0 t}."""
    if system.h0 is None:
        raise ValidationError("perturbative class operator needs the h0/h_int split")
    root = system._sqrt_outcome(label)
    w, v = system._eig("h0")
    return expm_from_eig(w, v, 1j * t) @ root @ system.h_int @ expm_from_eig(w, v, -1j * t)


def _class_operator(system, label, t, steps, method):
    if method == "exact":
        return class_operator_exact(system, label, t, steps)
    if method == "perturbative":
        return class_operator_perturbative(system, label, t)
    raise ValidationError(f"unknown class-operator method {method!r}")


def _amplitudes(system, label, times, steps, method):
    """V[a, :, k] = C(lambda, s_a) |k> sqrt(w_k) over rho0 eigencomponents."""
    w, vecs = system._rho_components()
    scaled = vecs * np.sqrt(w)
    out = np.empty((len(times), system.dim, scaled.shape[1]), dtype=complex)
    for a, s in enumerate(times):
        out[a] = _class_operator(system, label, float(s), steps, method) @ scaled
    return out


def _correlation(va, vb):
    """T[a, b] = Tr[C(s_a) rho0 C^dag(s_b)] from amplitude stacks."""
    return np.einsum("aik,bik->ab", va, np.conj(vb))


def detection_probability_interval(system: TransitionSystem, label, t1: float, t2: float,
                                   steps: int = 4096, quadrature_points: int = 65,
                                   method: str = "exact") -> float:
    """Probability of a detection with the given outcome inside [t1, t2].

    Double time integral of the two-time correlation trace by composite
    Simpson quadrature; non-negative up to roundoff because the discretized
    bilinear form is a Gram matrix (Schur-multiplied by the positive
    dephasing envelope when one is set).
    """
    if not t2 > t1:
        raise ValidationError("detection interval needs t1 < t2")
    if quadrature_points < 2:
        raise ValidationError("quadrature_points must be at least 2")
    n = odd_count(quadrature_points)
    nodes, h = uniform_nodes(t1, t2, n)
    wts = simpson_weights(n, h)
    v = _amplitudes(system, label, nodes, steps, method)
    corr = _correlation(v, v)
    corr *= system.dephasing_envelope(nodes[:, None] - nodes[None, :])
    value = complex(wts @ corr @ wts)
    return float(value.real)


def consistency_offdiagonal(system: TransitionSystem, label, t1: float, t2: float, t3: float,
                            steps: int = 4096, quadrature_points: int = 65,
                            method: str = "exact") -> float:
    """Additivity-violation term between the adjacent intervals [t1,t2], [t2,t3].

    2 Re \\int_{t1}^{t2} dt \\int_{t2}^{t3} dt' Tr[C(t) rho0 C^dag(t')]; its
    vanishing is the consistency condition for gluing interval probabilities.
    """
    if not (t1 <= t2 <= t3):
        raise ValidationError("consistency windows need t1 <= t2 <= t3")
    if t2 == t1 or t3 == t2:
        return 0.0
    n = odd_count(quadrature_points)
    nodes1, h1 = uniform_nodes(t1, t2, n)
    nodes2, h2 = uniform_nodes(t2, t3, n)
    w1 = simpson_weights(n, h1)
    w2 = simpson_weights(n, h2)
    va = _amplitudes(system, label, nodes1, steps, method)
    vb = _amplitudes(system, label, nodes2, steps, method)
    corr = _correlation(va, vb)
    corr *= system.dephasing_envelope(nodes1[:, None] - nodes2[None, :])
    return float(2.0 * np.real(w1 @ corr @ w2))


def consistency_ratio(system: TransitionSystem, label, t1: float, t2: float, t3: float,
                      steps: int = 4096, quadrature_points: int = 65,
                      method: str = "exact") -> float:
    """Off-diagonal term normalized by the two interval probabilities.

    The bare off-diagonal term saturates to a nonzero constant set by the
    shared corner t2 as the windows widen, so "suppression" is a statement
    about this ratio: probabilities grow with the window while the corner
    term does not.
    """
    off = consistency_offdiagonal(system, label, t1, t2, t3, steps, quadrature_points, method)
    p1 = detection_probability_interval(system, label, t1, t2, steps, quadrature_points, method)
    p2 = detection_probability_interval(system, label, t2, t3, steps, quadrature_points, method)
    if p1 + p2 <= 0.0:
        raise NumericalError("interval probabilities vanish; consistency ratio undefined")
    return abs(off) / (p1 + p2)


def smeared_povm_element(system: TransitionSystem, label, t: float, kernel: SmearingKernel,
                         steps: int = 4096, quadrature_points: int = 65,
                         method: str = "exact") -> np.ndarray:
    """POVM density Pi(lambda, t): smeared class operators squared.

    Pi = \\int ds ds' sqrt(f(s - t) f(s' - t)) C^dag(s') C(s) over the
    truncated window |s - t| <= truncation * sigma.  Assembled in factorized
    form, so the result is positive semidefinite by construction (with a
    dephasing envelope the scalar kernel is diagonalized first and remains
    positive by Schur's theorem).
    """
    n = odd_count(quadrature_points)
    half = kernel.truncation * kernel.sigma
    nodes, h = uniform_nodes(t - half, t + half, n)
    if h > kernel.sigma:
        raise NumericalError(f"smearing window underflow: quadrature step {h:.3e} "
                             f"exceeds sigma {kernel.sigma:.3e}")
    g = simpson_weights(n, h) * kernel.sqrt_f(nodes - t)
    ops = [_class_operator(system, label, float(s), steps, method) for s in nodes]
    if system.dephasing_time is None:
        b = np.zeros((system.dim, system.dim), dtype=complex)
        for ga, op in zip(g, ops):
            b += ga * op
        return hermitize(b.conj().T @ b)
    kappa = np.outer(g, g) * system.dephasing_envelope(nodes[:, None] - nodes[None, :])
    lam, u = np.linalg.eigh(kappa)
    out = np.zeros((system.dim, system.dim), dtype=complex)
    stack = np.stack(ops)
    for r in range(len(lam)):
        if abs(lam[r]) < 1e-300:
            continue
        br = np.tensordot(u[:, r], stack, axes=(0, 0))
        out += lam[r] * (br.conj().T @ br)
    return hermitize(out)


def no_detection_operator(system: TransitionSystem, horizon: float, kernel: SmearingKernel,
                          steps: int = 4096, quadrature_points: int = 65,
                          time_points: int = 33, method: str = "exact") -> np.ndarray:
    """1 minus the POVM integrated over all outcomes and t in [0, horizon]."""
    if not horizon > 0.0:
        raise ValidationError("no-detection horizon must be positive")
    n = odd_count(time_points)
    nodes, h = uniform_nodes(0.0, horizon, n)
    wts = simpson_weights(n, h)
    acc = np.zeros((system.dim, system.dim), dtype=complex)
    for label in system.outcomes:
        for wt, t in zip(wts, nodes):
            acc += wt * smeared_povm_element(system, label, float(t), kernel,
                                             steps, quadrature_points, method)
    return hermitize(np.eye(system.dim) - acc)


class TransitionDensity(NamedTuple):
    value: float
    imag_defect: float


def transition_density(system: TransitionSystem, label, t: float,
                       kernel: SmearingKernel | None = None, steps: int = 4096,
                       quadrature_points: int = 65, tau_window: float | None = None,
                       method: str = "exact") -> TransitionDensity:
    """Transition density at time t.

    With a smearing kernel:
        P(lambda, t) = \\int d tau g_sigma(tau)
                       Tr[C(lambda, t + tau/2) rho0 C^dag(lambda, t - tau/2)]
    with the tau integral truncated at truncation * sigma.  Without a kernel
    the infinite-resolution form (g == 1) is evaluated over the caller-set
    window |tau| <= tau_window, which is then mandatory.

    The trace integral is real up to quadrature roundoff; the imaginary part
    is returned as a diagnostic.
    """
    if kernel is None:
        if tau_window is None:
            raise ValidationError("the infinite-resolution mode needs an explicit tau_window")
        half = float(tau_window)
        g = None
    else:
        half = kernel.truncation * kernel.sigma
        g = kernel.g
    n = odd_count(quadrature_points)
    taus, h = uniform_nodes(-half, half, n)
    # amplitudes are shared through a half-step grid: t + tau_a / 2 is the
    # a-th node and t - tau_a / 2 the mirrored one
    half_grid = t + 0.5 * taus
    v = _amplitudes(system, label, half_grid, steps, method)
    corr = np.einsum("aik,aik->a", v, np.conj(v[::-1]))
    weights = simpson_weights(n, h)
    if g is not None:
        weights = weights * g(taus)
    weights = weights * system.dephasing_envelope(taus)
    total = complex(weights @ corr)
    return TransitionDensity(value=float(total.real), imag_defect=abs(total.imag))
