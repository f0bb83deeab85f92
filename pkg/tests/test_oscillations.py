import math

import numpy as np
import pytest

from toalab import (DecoherenceKernel, ExponentialEnvelope, GaussianEnvelope, NoPeakError,
                    OscillationScenario, ValidationError, envelope_autocorrelation,
                    fit_wavenumber, localization_length, nonstandard_wavenumber,
                    oscillation_probability, oscillation_sweep, standard_wavenumber)

ROT = np.array([[math.cos(math.pi / 4), math.sin(math.pi / 4)],
                [-math.sin(math.pi / 4), math.cos(math.pi / 4)]])


def scenario(kernel, masses=(math.sqrt(2.0), 1.0), momenta=(10.0, 10.0), sigma_x=50.0,
             threshold=0.0, envelope="exponential", mixing=None):
    env = (ExponentialEnvelope if envelope == "exponential" else GaussianEnvelope)(sigma_x)
    return OscillationScenario(masses=np.asarray(masses, float),
                               mixing=ROT if mixing is None else mixing,
                               momenta=np.asarray(momenta, float),
                               envelope=env, kernel=kernel, threshold=threshold)


# ---------------------------------------------------------------------------
# construction

def test_mixing_must_be_unitary():
    bad = np.array([[1.0, 0.2], [0.0, 1.0]], dtype=complex)
    with pytest.raises(ValidationError, match="unitary"):
        scenario(DecoherenceKernel(kind="delta"), mixing=bad)


def test_kernel_validation():
    with pytest.raises(ValidationError):
        DecoherenceKernel(kind="gaussian")  # needs tau_dec
    with pytest.raises(ValidationError):
        DecoherenceKernel(kind="nope")
    k = DecoherenceKernel(kind="gaussian", tau_dec=2.0)
    tau = np.linspace(-5, 5, 11)
    assert np.all(k(tau) <= k(0.0))
    assert np.allclose(k(tau), k(-tau))


def test_threshold_above_energy_rejected():
    with pytest.raises(ValidationError, match="threshold"):
        scenario(DecoherenceKernel(kind="delta"), threshold=50.0)


def test_envelope_normalization():
    # integrate each half-line separately: the exponential profile has a cusp
    # at zero, and composite rules need it at a panel boundary
    from toalab.quadrature import integrate_uniform
    for env in (GaussianEnvelope(3.0), ExponentialEnvelope(3.0)):
        x = np.linspace(0.0, env.support_multiplier * 3.0, 20001)
        half = integrate_uniform(env(x) ** 2, x[1] - x[0])
        assert 2.0 * half == pytest.approx(1.0, abs=1e-8)
        assert np.all(env(x) >= 0.0)


def test_envelope_autocorrelation_gaussian():
    env = GaussianEnvelope(2.0)
    for shift in (0.0, 1.5, 4.0):
        assert envelope_autocorrelation(env, shift) == pytest.approx(
            math.exp(-shift**2 / (4.0 * 2.0**2)), abs=1e-9)


# ---------------------------------------------------------------------------
# closed-form wavenumbers

def test_standard_wavenumber_substitution():
    sc = scenario(DecoherenceKernel(kind="delta"), masses=(math.sqrt(4.5), math.sqrt(3.5)),
                  momenta=(2.0, 2.0))
    assert standard_wavenumber(sc, 0, 1) == pytest.approx(0.25)  # (m_i^2 - m_j^2) / (2 pbar)
    assert standard_wavenumber(sc, 1, 1) == 0.0


def test_standard_general_reduces_ultrarelativistically():
    sc = scenario(DecoherenceKernel(kind="delta"), masses=(1.0, 0.5), momenta=(100.0, 100.0))
    general = standard_wavenumber(sc, 0, 1, form="general")
    reduced = standard_wavenumber(sc, 0, 1, form="equal-momentum")
    assert abs(general - reduced) / reduced < (1.0 / 100.0) ** 2


def test_nonstandard_doubles_standard_at_zero_threshold():
    sc = scenario(DecoherenceKernel(kind="delta"))
    assert nonstandard_wavenumber(sc, 0, 1) / standard_wavenumber(sc, 0, 1) == pytest.approx(2.0)


def test_nonstandard_nonrelativistic_reduction():
    sc = scenario(DecoherenceKernel(kind="delta"), masses=(10.5, 9.5), momenta=(1.0, 1.0),
                  threshold=1.0)
    exact = nonstandard_wavenumber(sc, 0, 1)
    # hand evaluation: (m_i^2 - m_j^2)/p - (E0/p)(E_i - E_j)
    e_i, e_j = math.sqrt(10.5**2 + 1.0), math.sqrt(9.5**2 + 1.0)
    assert exact == pytest.approx(20.0 - (e_i - e_j), rel=1e-12)
    reduced = nonstandard_wavenumber(sc, 0, 1, form="nonrelativistic")
    assert reduced == pytest.approx(19.0)  # (m_i - m_j)(2 m - E0) / pbar
    assert abs(exact - reduced) / exact < 0.01


def test_nonstandard_ultrarelativistic_reduction():
    sc = scenario(DecoherenceKernel(kind="delta"), masses=(1.0, 0.5), momenta=(100.0, 100.0),
                  threshold=10.0)
    exact = nonstandard_wavenumber(sc, 0, 1)
    reduced = nonstandard_wavenumber(sc, 0, 1, form="ultrarelativistic")
    assert reduced == pytest.approx((1.0 - 0.25) / 100.0 * (1.0 - 10.0 / 200.0), rel=1e-12)
    assert abs(exact - reduced) / exact < (1.0 / 100.0) ** 2


def test_localization_length():
    sc = scenario(DecoherenceKernel(kind="delta"), sigma_x=50.0)
    v = sc.velocities
    expected = 50.0 * 0.5 * (v[0] + v[1]) / abs(v[0] - v[1])
    assert localization_length(sc, 0, 1) == pytest.approx(expected)
    assert localization_length(sc, 0, 0) == math.inf


# ---------------------------------------------------------------------------
# wavenumber fitting

def test_fit_synthetic_cosine():
    l_values = np.linspace(0.0, 800.0, 4096)
    p = 1.0 + 0.5 * np.cos(0.25 * l_values)
    assert fit_wavenumber(l_values, p) == pytest.approx(0.25, rel=0.005)


def test_fit_accepts_sample_pairs():
    l_values = np.linspace(0.0, 800.0, 4096)
    p = 1.0 + 0.5 * np.cos(0.25 * l_values)
    samples = np.column_stack([l_values, p])
    assert fit_wavenumber(samples) == pytest.approx(0.25, rel=0.005)


def test_fit_constant_raises():
    l_values = np.linspace(0.0, 800.0, 1024)
    with pytest.raises(NoPeakError):
        fit_wavenumber(l_values, np.full(1024, 3.7))


def test_fit_too_few_periods():
    l_values = np.linspace(0.0, 10.0, 1024)
    with pytest.raises(ValidationError, match="periods"):
        fit_wavenumber(l_values, 1.0 + 0.5 * np.cos(0.25 * l_values))


def test_fit_needs_uniform_spacing():
    l_values = np.cumsum(np.random.default_rng(0).uniform(0.5, 1.5, 128))
    with pytest.raises(ValidationError, match="uniform"):
        fit_wavenumber(l_values, np.cos(l_values))


# ---------------------------------------------------------------------------
# probability integrals

def test_identity_mixing_kills_transitions():
    sc = scenario(DecoherenceKernel(kind="delta"), mixing=np.eye(2, dtype=complex))
    assert abs(oscillation_probability(sc, 1, 0, 400.0)) < 1e-15


def test_single_mass_no_l_dependence():
    sc = scenario(DecoherenceKernel(kind="delta"), masses=(1.0, 1.0))
    l_values = np.linspace(350.0, 750.0, 33)
    cross = oscillation_sweep(sc, 1, 0, l_values)
    assert np.max(np.abs(cross.values)) < 1e-15  # orthogonal flavors, no splitting
    same = oscillation_sweep(sc, 0, 0, l_values)
    spread = same.values.max() - same.values.min()
    assert spread < 1e-6 * abs(same.values.mean())


def test_flavor_conservation_delta_kernel():
    sc = scenario(DecoherenceKernel(kind="delta"))
    l_values = np.linspace(350.0, 750.0, 17)
    total = sum(oscillation_sweep(sc, flavor, 0, l_values, s_points=16385).values
                for flavor in (0, 1))
    assert (total.max() - total.min()) / total.mean() < 1e-4


def test_probability_reality_diagnostic():
    sc = scenario(DecoherenceKernel(kind="delta"))
    res = oscillation_sweep(sc, 1, 0, np.linspace(350.0, 750.0, 64))
    assert res.imag_max < 1e-8


def test_window_clipping_rejected():
    sc = scenario(DecoherenceKernel(kind="delta"), envelope="gaussian", sigma_x=50.0)
    with pytest.raises(ValidationError, match="clips"):
        oscillation_probability(sc, 1, 0, 30.0)  # source practically on top of the detector


def test_regime_dichotomy():
    l_values = np.linspace(350.0, 980.0, 1024)
    fits = {}
    for kind in ("delta", "constant"):
        sc = scenario(DecoherenceKernel(kind=kind))
        res = oscillation_sweep(sc, 1, 0, l_values)
        assert res.clipped_mass < 1e-6
        fits[kind] = abs(fit_wavenumber(res.l_values, res.values))
    sc = scenario(DecoherenceKernel(kind="delta"))
    assert fits["delta"] == pytest.approx(standard_wavenumber(sc, 0, 1), rel=0.01)
    assert fits["constant"] == pytest.approx(nonstandard_wavenumber(sc, 0, 1), rel=0.01)
    assert fits["constant"] / fits["delta"] == pytest.approx(2.0, rel=0.02)


def test_gaussian_kernel_interpolates_monotonically():
    # near-threshold scenario keeps both regimes at comparable magnitude
    base = dict(masses=(math.sqrt(2.0), 1.0), momenta=(3.0, 3.0), sigma_x=8.0,
                threshold=3.16, envelope="gaussian")
    sc0 = scenario(DecoherenceKernel(kind="delta"), **base)
    k_st = standard_wavenumber(sc0, 0, 1)
    k_nst = nonstandard_wavenumber(sc0, 0, 1)
    v = sc0.velocities
    split = abs(137.0 / v[0] - 137.0 / v[1])  # arrival-time separation mid-sweep
    l_values = np.linspace(60.0, 215.0, 384)
    fits = []
    for ratio in (0.01, 0.1, 1.0, 10.0, 100.0):
        sc = scenario(DecoherenceKernel(kind="gaussian", tau_dec=ratio * split), **base)
        res = oscillation_sweep(sc, 1, 0, l_values, s_points=513, tau_points=257)
        fits.append(abs(fit_wavenumber(res.l_values, res.values)))
    slack = 1e-4 * k_nst
    assert all(b >= a - slack for a, b in zip(fits, fits[1:]))
    assert fits[0] == pytest.approx(k_st, rel=0.02)
    assert fits[-1] == pytest.approx(k_nst, rel=0.02)


def test_localization_suppression():
    sc = scenario(DecoherenceKernel(kind="delta"), sigma_x=10.0, envelope="gaussian")
    lloc = localization_length(sc, 0, 1)
    period = 2.0 * math.pi / standard_wavenumber(sc, 0, 1)

    def amplitude(l_center):
        window = np.linspace(l_center, l_center + 2.0 * period, 192)
        res = oscillation_sweep(sc, 1, 0, window)
        return 0.5 * (res.values.max() - res.values.min())

    assert amplitude(3.0 * lloc) / amplitude(0.05 * lloc) < 0.2


def test_mean_velocity_choice_insensitive():
    for mode in ("arithmetic", "geometric"):
        sc = OscillationScenario(masses=np.array([math.sqrt(2.0), 1.0]), mixing=ROT,
                                 momenta=np.array([10.0, 10.0]),
                                 envelope=ExponentialEnvelope(50.0),
                                 kernel=DecoherenceKernel(kind="delta"), v_mean_mode=mode)
        if mode == "arithmetic":
            k_arith = standard_wavenumber(sc, 0, 1, form="general")
        else:
            k_geom = standard_wavenumber(sc, 0, 1, form="general")
    assert abs(k_arith - k_geom) / abs(k_arith) < 1e-4
