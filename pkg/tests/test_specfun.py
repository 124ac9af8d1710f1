"""Quadrature layer: two independent routes for everything."""

import math

import pytest

from bdrelab.errors import NotComputableError, NumericalFailure
from bdrelab.model import ModelParams, Regime, classify_regime
from bdrelab.specfun import (
    DEFAULT_QUAD,
    INFINITE,
    DomainMap,
    QuadratureConfig,
    Reading,
    integral_a_psi,
    integrate_semi_infinite,
    laplace_Y,
    mean_inverse_gamma,
    phi_beta,
    phi_beta_tensor_oracle,
    psi,
    psi_closed_form,
    theorem1_constant,
)

# Values frozen from an independent brute-force tensor quadrature run
# before the adaptive implementation existed.
PHI_GOLDEN = {
    (1.0, 1.0): 0.09911666173345045,
    (0.5, 1.0): 0.6002633324909991,
    (2.0, 1.0): 0.009680389691228449,
    (1.0, 0.5): 0.4626788358934655,
    (1.0, 2.0): 0.021880381767816205,
    (0.5, 0.5): 2.1029072758878704,
    (2.0, 2.0): 0.0012192800784163617,
    (5.0, 1.0): 8.091950436743643e-05,
    (1.0, 4.0): 0.007070097742159484,
}


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
def test_psi_quadrature_matches_closed_form(a):
    assert psi(a) == pytest.approx(psi_closed_form(a), rel=1e-10)


def test_psi_closed_form_spot_value():
    # e^{-1} / sqrt(2 pi) at a = 1
    assert psi_closed_form(1.0) == pytest.approx(0.1467626632, rel=1e-9)


def test_psi_rejects_nonpositive_argument():
    with pytest.raises(ValueError):
        psi(0.0)


def test_integral_a_psi_both_routes():
    ref = 1.0 / math.sqrt(2.0 * math.pi)
    assert integral_a_psi() == pytest.approx(ref, abs=1e-9)
    assert integral_a_psi(use_closed_form=False) == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("a,beta", sorted(PHI_GOLDEN))
def test_phi_beta_against_frozen_goldens(a, beta):
    assert phi_beta(a, beta) == pytest.approx(PHI_GOLDEN[(a, beta)], rel=1e-8)


def test_phi_beta_adaptive_vs_tensor_oracle():
    for (a, beta) in ((0.5, 0.5), (1.0, 1.0), (2.0, 2.0)):
        assert phi_beta(a, beta) == pytest.approx(
            phi_beta_tensor_oracle(a, beta), rel=1e-8
        )


def test_integrate_semi_infinite_both_domain_maps():
    for m in (DomainMap.EXP_SUBSTITUTION, DomainMap.TAN_SUBSTITUTION):
        val = integrate_semi_infinite(lambda x: math.exp(-x), DEFAULT_QUAD, map_override=m)
        assert val == pytest.approx(1.0, rel=1e-10)


def test_quadrature_budget_exhaustion_raises():
    tight = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-15, max_subdivisions=1)
    with pytest.raises(NumericalFailure):
        integrate_semi_infinite(lambda x: math.exp(-x) * math.cos(7.0 * x) ** 2, tight)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)


def test_mean_inverse_gamma_values_and_blowup():
    assert mean_inverse_gamma(2.0) == pytest.approx(1.0)
    assert mean_inverse_gamma(3.0) == pytest.approx(0.5)
    assert mean_inverse_gamma(1.0) == INFINITE
    assert mean_inverse_gamma(0.5) == INFINITE


def test_laplace_Y_readings_disagree_in_the_limit():
    std = ModelParams(1.0, 1.0, 1.0, 1.0)
    inv = laplace_Y(math.inf, 1.0, std, Reading.INVERSE_GAMMA)
    printed = laplace_Y(math.inf, 1.0, std, Reading.AS_PRINTED)
    assert inv == pytest.approx(0.25, abs=1e-10)
    # the as-printed orientation lands on a Bessel value instead
    assert printed == pytest.approx(0.5075195091321117, rel=1e-10)
    assert abs(printed - 0.25) > 0.2


def test_laplace_Y_as_printed_beta_one_bessel_value():
    p = ModelParams(0.5, 1.0, 1.0, 1.0)
    assert laplace_Y(math.inf, 1.0, p, Reading.AS_PRINTED) == pytest.approx(
        0.2797317636330449, rel=1e-10
    )


def test_laplace_Y_degenerate_arguments():
    std = ModelParams(1.0, 1.0, 1.0, 1.0)
    assert laplace_Y(0.0, 1.0, std) == 1.0
    assert laplace_Y(2.0, 0.0, std) == 1.0
    v = laplace_Y(1.0, 1.0, std)
    assert 0.0 < v < 1.0


def test_theorem1_constant_by_regime():
    strong = ModelParams(2.0, 1.0, 1.0, 1.0)
    inter = ModelParams(1.0, 1.0, 1.0, 1.0)
    weak = ModelParams(0.5, 1.0, 1.0, 1.0)
    assert theorem1_constant(strong, Regime.STRONGLY_SUPERCRITICAL, 1.0) == pytest.approx(1.0)
    assert theorem1_constant(inter, Regime.INTERMEDIATE_SUPERCRITICAL, 1.0) == pytest.approx(
        2.0 / math.sqrt(2.0 * math.pi)
    )
    with pytest.raises(NotComputableError):
        theorem1_constant(weak, Regime.WEAKLY_SUPERCRITICAL, 1.0)


def test_theorem1_constant_regime_mismatch_rejected():
    strong = ModelParams(2.0, 1.0, 1.0, 1.0)
    assert classify_regime(strong) is Regime.STRONGLY_SUPERCRITICAL
    with pytest.raises(ValueError):
        theorem1_constant(strong, Regime.INTERMEDIATE_SUPERCRITICAL, 1.0)


def test_theorem1_constant_strong_with_infinite_moment():
    # nu = 2 (alpha / sigma_e^2 - 1) <= 1 makes E[1/Gamma] blow up
    p = ModelParams(1.2, 1.0, 1.0, 1.0)
    assert classify_regime(p) is Regime.STRONGLY_SUPERCRITICAL
    assert theorem1_constant(p, Regime.STRONGLY_SUPERCRITICAL, 1.0) == INFINITE
