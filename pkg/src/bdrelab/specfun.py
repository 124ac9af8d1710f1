"""Special functions and constants behind the decay-rate asymptotics.

Everything here is deterministic quadrature: the survival-kernel density
psi and its first moment, the two-parameter density phi_beta, inverse
moments of the gamma law, the Laplace transform of the martingale limit,
and the assembled leading constants for the three supercritical decay
regimes.

Improper integrals over (0, inf) are mapped to (0, 1) by an explicit
substitution and handed to adaptive quadrature (QUADPACK via
scipy.integrate.quad). A quadrature that exhausts its subdivision budget
or reports non-convergence raises NumericalFailure rather than returning
a half-trusted number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _special
from scipy.stats import gamma as _gamma_dist

from .errors import NotComputableError, NumericalFailure
from .model import ModelParams, Regime

__all__ = [
    "INFINITE",
    "DomainMap",
    "QuadratureConfig",
    "DEFAULT_QUAD",
    "GammaLaw",
    "Reading",
    "integrate_semi_infinite",
    "psi",
    "psi_closed_form",
    "integral_a_psi",
    "phi_beta",
    "phi_beta_tensor_oracle",
    "mean_inverse_gamma",
    "laplace_Y",
    "theorem1_constant",
]

# Distinguished "diverges" value. Quadrature never overflows to inf in this
# module (failures raise instead), so an inf in a report always means a
# genuinely divergent quantity, not a float accident.
INFINITE: float = math.inf


class DomainMap(Enum):
    """Substitution used to fold (0, inf) onto (0, 1)."""

    EXP_SUBSTITUTION = "ExpSubstitution"
    TAN_SUBSTITUTION = "TanSubstitution"


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    infinite_domain_map: DomainMap = DomainMap.EXP_SUBSTITUTION

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be a positive integer")
        if not isinstance(self.infinite_domain_map, DomainMap):
            raise ValueError("infinite_domain_map must be a DomainMap")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class GammaLaw:
    """Gamma law with shape nu and scale fixed at 1."""

    nu: float

    def __post_init__(self) -> None:
        if not (self.nu > 0) or not math.isfinite(self.nu):
            raise ValueError("gamma shape nu must be positive and finite")

    def pdf(self, x):
        return _gamma_dist.pdf(x, a=self.nu)

    def sample(self, generator: np.random.Generator, size: int):
        return generator.standard_gamma(self.nu, size=size)


class Reading(Enum):
    """Which direction the gamma variable enters the limit-law transform."""

    AS_PRINTED = "AsPrinted"
    INVERSE_GAMMA = "InverseGamma"


def integrate_semi_infinite(
    f: Callable[[float], float],
    cfg: QuadratureConfig = DEFAULT_QUAD,
    map_override: Optional[DomainMap] = None,
) -> float:
    """Adaptive quadrature of f over (0, inf) via a (0,1) substitution.

    ExpSubstitution uses y = -log(1 - u); TanSubstitution uses
    y = tan(pi u / 2). Raises NumericalFailure if QUADPACK does not
    converge within the subdivision budget.
    """
    dmap = map_override if map_override is not None else cfg.infinite_domain_map
    if dmap is DomainMap.EXP_SUBSTITUTION:

        def g(u: float) -> float:
            if u >= 1.0:
                return 0.0
            y = -math.log1p(-u)
            return f(y) / (1.0 - u)

    else:

        def g(u: float) -> float:
            if u >= 1.0:
                return 0.0
            h = 0.5 * math.pi * u
            t = math.tan(h)
            c = math.cos(h)
            return f(t) * 0.5 * math.pi / (c * c)

    out = _integrate.quad(
        g,
        0.0,
        1.0,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        full_output=1,
    )
    if len(out) > 3:
        # QUADPACK flagged trouble; keep the answer only if its own error
        # estimate still meets the requested tolerance.
        val, abserr = float(out[0]), float(out[1])
        if abserr <= max(cfg.abs_tol, cfg.rel_tol * abs(val)):
            return val
        raise NumericalFailure(f"quadrature did not converge: {out[-1]}")
    return float(out[0])


def _psi_integrand(y: float, a: float) -> float:
    # exp(-a cosh^2 y) * cosh y, evaluated through logs so the huge-y
    # region underflows cleanly instead of overflowing cosh.
    lc = y + math.log1p(math.exp(-2.0 * y)) - math.log(2.0)
    if 2.0 * lc > 700.0:
        return 0.0
    m = a * math.exp(2.0 * lc)
    if m - lc > 745.0:
        return 0.0
    return math.exp(lc - m)


def psi(a: float, q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Survival-kernel density: (sqrt(2)/pi) a^{-1/2} Int exp(-a cosh^2 y) cosh y dy."""
    if not (a > 0):
        raise ValueError("psi requires a > 0")
    inner = integrate_semi_infinite(lambda y: _psi_integrand(y, a), q)
    return (math.sqrt(2.0) / math.pi) * inner / math.sqrt(a)


def psi_closed_form(a: float) -> float:
    """Analytic reduction of psi: e^{-a} / (sqrt(2 pi) a).

    The substitution u = sinh y turns the defining integral into
    Int_0^inf e^{-a(1+u^2)} du = e^{-a} sqrt(pi/a)/2, and the prefactor
    collapses the rest.
    """
    if not (a > 0):
        raise ValueError("psi requires a > 0")
    return math.exp(-a) / (math.sqrt(2.0 * math.pi) * a)


def integral_a_psi(
    q: QuadratureConfig = DEFAULT_QUAD, use_closed_form: bool = True
) -> float:
    """Int_0^inf a psi(a) da, the intermediate-regime moment (= 1/sqrt(2 pi)).

    With use_closed_form the integrand is a * psi_closed_form(a); otherwise
    psi is re-evaluated by quadrature at every node (a genuinely independent
    second route, used by the two-route agreement test).
    """
    if use_closed_form:
        fn = lambda a: a * psi_closed_form(a) if a > 0 else 0.0
    else:
        inner_cfg = QuadratureConfig(
            rel_tol=min(q.rel_tol, 1e-11),
            abs_tol=min(q.abs_tol, 1e-13),
            max_subdivisions=q.max_subdivisions,
            infinite_domain_map=q.infinite_domain_map,
        )
        fn = lambda a: a * psi(a, inner_cfg) if a > 0 else 0.0
    return integrate_semi_infinite(fn, q)


def _logsinh(x: float) -> float:
    if x > 20.0:
        return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)
    return math.log(math.sinh(x))


def _logcosh(x: float) -> float:
    if x > 20.0:
        return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)
    return math.log(math.cosh(x))


def _phi_xi_integrand(xi: float, u: float, beta: float, log_a: float) -> float:
    # sinh(xi) cosh(xi) xi / (u + a cosh^2 xi)^{(beta+2)/2} in log space.
    if xi <= 0.0:
        return 0.0
    ld = np.logaddexp(math.log(u), log_a + 2.0 * _logcosh(xi))
    le = _logsinh(xi) + _logcosh(xi) + math.log(xi) - 0.5 * (beta + 2.0) * ld
    if le < -745.0:
        return 0.0
    return math.exp(le)


def phi_beta(a: float, beta: float, q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """The two-parameter density of the weak-regime kernel, by iterated quadrature.

    Evaluates the double integral over (xi, u) in (0, inf)^2 of

        C(beta) e^{-a} a^{-beta/2} u^{(beta-1)/2} e^{-u}
            * sinh(xi) cosh(xi) xi / (u + a cosh^2 xi)^{(beta+2)/2}

    with C(beta) = Gamma((beta+2)/2) / (sqrt(2) pi). The inner xi integral
    decays like xi e^{-beta xi} and uses the exponential map; the outer u
    integral carries the u^{(beta-1)/2} endpoint singularity (for beta < 1)
    and the slower effective tail, and uses the tangent map.
    """
    if not (a > 0 and beta > 0):
        raise ValueError("phi_beta requires a > 0 and beta > 0")
    log_a = math.log(a)
    # Iterated quadrature cannot certify tolerances near machine precision
    # (the outer integrand carries the inner quadrature's own noise), so
    # both passes run with floors well inside the 1e-6 route-agreement
    # budget but loose enough for QUADPACK to reach.
    inner_cfg = QuadratureConfig(
        rel_tol=max(q.rel_tol, 1e-10),
        abs_tol=max(q.abs_tol, 1e-12),
        max_subdivisions=q.max_subdivisions,
        infinite_domain_map=DomainMap.EXP_SUBSTITUTION,
    )
    outer_cfg = QuadratureConfig(
        rel_tol=max(q.rel_tol, 1e-9),
        abs_tol=max(q.abs_tol, 1e-12),
        max_subdivisions=q.max_subdivisions,
        infinite_domain_map=q.infinite_domain_map,
    )

    def outer(u: float) -> float:
        if u <= 0.0:
            return 0.0
        log_w = 0.5 * (beta - 1.0) * math.log(u) - u
        if log_w < -720.0:
            return 0.0
        inner = integrate_semi_infinite(
            lambda xi: _phi_xi_integrand(xi, u, beta, log_a), inner_cfg
        )
        return math.exp(log_w) * inner

    raw = integrate_semi_infinite(outer, outer_cfg, map_override=DomainMap.TAN_SUBSTITUTION)
    pref = (
        math.gamma(0.5 * (beta + 2.0))
        / (math.sqrt(2.0) * math.pi)
        * math.exp(-a - 0.5 * beta * log_a)
    )
    return pref * raw


def phi_beta_tensor_oracle(
    a: float, beta: float, n_laguerre: int = 200, n_legendre: int = 2000
) -> float:
    """Independent brute-force route for phi_beta on a fixed tensor grid.

    Generalized Gauss-Laguerre (weight u^{(beta-1)/2} e^{-u}) handles the
    u direction exactly; Gauss-Legendre on a truncated xi interval handles
    the other. No adaptivity and no shared code path with phi_beta, which
    is the point: the two routes agree only if both are right.
    """
    if not (a > 0 and beta > 0):
        raise ValueError("phi_beta requires a > 0 and beta > 0")
    u_nodes, u_weights = _special.roots_genlaguerre(n_laguerre, 0.5 * (beta - 1.0))
    xi_hi = max(60.0, 800.0 / (beta + 2.0))
    x, w = np.polynomial.legendre.leggauss(n_legendre)
    xi = 0.5 * xi_hi * (x + 1.0)
    xi_w = 0.5 * xi_hi * w
    lsinh = np.where(xi > 20.0, xi + np.log1p(-np.exp(-2.0 * xi)) - math.log(2.0), np.log(np.sinh(xi)))
    lcosh = np.where(xi > 20.0, xi + np.log1p(np.exp(-2.0 * xi)) - math.log(2.0), np.log(np.cosh(xi)))
    log_a = math.log(a)
    # (n_laguerre, n_legendre) grid of the log kernel
    ld = np.logaddexp(np.log(u_nodes)[:, None], log_a + 2.0 * lcosh[None, :])
    le = (lsinh + lcosh + np.log(xi))[None, :] - 0.5 * (beta + 2.0) * ld
    kern = np.where(le < -745.0, 0.0, np.exp(le))
    raw = float(u_weights @ kern @ xi_w)
    pref = (
        math.gamma(0.5 * (beta + 2.0))
        / (math.sqrt(2.0) * math.pi)
        * math.exp(-a - 0.5 * beta * log_a)
    )
    return pref * raw


def mean_inverse_gamma(nu: float) -> float:
    """E[1/G] for G gamma(nu, 1): 1/(nu-1) for nu > 1, INFINITE for nu <= 1."""
    if not (nu > 0):
        raise ValueError("mean_inverse_gamma requires nu > 0")
    if nu <= 1.0:
        return INFINITE
    return 1.0 / (nu - 1.0)


def laplace_Y(
    lam: float,
    z: float,
    params: ModelParams,
    reading: Reading = Reading.INVERSE_GAMMA,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """Laplace transform of the martingale limit: E[exp(-z / (B + 1/lambda))].

    Under Reading.AS_PRINTED, B = (sigma_b^2/sigma_e^2) G_beta; under
    Reading.INVERSE_GAMMA, B = sigma_b^2/(sigma_e^2 G_beta). The two
    readings disagree, and only the inverse-gamma one reproduces the
    extinction probability in the lambda -> inf limit; both are kept so
    the disagreement stays checkable. Conventions: lambda = 0 gives 1
    (c/inf := 0) and lambda = inf drops the 1/lambda shift.
    """
    if params.alpha <= 0 or params.sigma_e <= 0 or params.sigma_b <= 0:
        raise ValueError("laplace_Y requires alpha, sigma_e, sigma_b > 0")
    if z < 0:
        raise ValueError("z must be nonnegative")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if z == 0.0 or lam == 0.0:
        return 1.0
    inv_lam = 0.0 if math.isinf(lam) else 1.0 / lam
    beta = params.beta
    ratio = params.sigma_b**2 / params.sigma_e**2
    law = GammaLaw(beta)

    def integrand(g: float) -> float:
        if g <= 0.0:
            return 0.0
        b = ratio * g if reading is Reading.AS_PRINTED else ratio / g
        return math.exp(-z / (b + inv_lam)) * float(law.pdf(g))

    val = integrate_semi_infinite(integrand, q)
    return min(max(val, 0.0), 1.0)


def theorem1_constant(
    params: ModelParams,
    regime: Regime,
    z: float,
    q: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """Leading constant of the conditioned-survival decay, per regime.

    Intermediate: (2 z sigma_e / sigma_b^2) Int a psi(a) da.
    Strong: (z sigma_e^2 / sigma_b^2) E[1/G_nu] with nu = 2(alpha/sigma_e^2 - 1);
    returns INFINITE when that inverse moment diverges (nu <= 1).
    Weak: raises NotComputableError, because the density the weak-regime
    constant integrates against phi_beta is never specified; only the
    weak decay exponents are verifiable.
    """
    if regime not in (
        Regime.WEAKLY_SUPERCRITICAL,
        Regime.INTERMEDIATE_SUPERCRITICAL,
        Regime.STRONGLY_SUPERCRITICAL,
    ):
        raise ValueError("theorem1_constant applies to supercritical regimes only")
    from .model import classify_regime

    actual = classify_regime(params)
    if actual is not regime:
        raise ValueError(
            f"parameters classify as {actual.value}, not {regime.value}"
        )
    if params.sigma_b <= 0 or z < 0:
        raise ValueError("requires sigma_b > 0 and z >= 0")
    if regime is Regime.WEAKLY_SUPERCRITICAL:
        raise NotComputableError(
            "the weak-regime constant integrates an unspecified function "
            "against phi_beta; only the decay exponents are checkable"
        )
    if regime is Regime.INTERMEDIATE_SUPERCRITICAL:
        return (2.0 * z * params.sigma_e / params.sigma_b**2) * integral_a_psi(q)
    nu = 2.0 * (params.alpha / params.sigma_e**2 - 1.0)
    m = mean_inverse_gamma(nu)
    if m == INFINITE:
        return INFINITE
    return (z * params.sigma_e**2 / params.sigma_b**2) * m
