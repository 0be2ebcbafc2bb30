"""Closed-form gains, error rates and GLLP-style key rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize


@dataclass(frozen=True)
class RateModelParams:
    """Source/channel/detector bundle for the analytic rate model.

    Attributes
    ----------
    mu : float
        Signal mean photon number.
    eta : float
        Total single-photon transmittance (fiber times detector efficiency).
    dark_count_prob : float
        Per-pulse dark-count yield Y0.
    misalignment : float
        Misalignment error probability e_d.
    f_ec : float
        Reconciliation inefficiency (>= 1).
    q : float
        Protocol factor, 1/2 for symmetric basis choice.
    """

    mu: float = 0.1
    eta: float = 0.01
    dark_count_prob: float = 1e-5
    misalignment: float = 0.01
    f_ec: float = 1.22
    q: float = 0.5

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        for name in ("eta", "dark_count_prob", "misalignment"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.f_ec < 1:
            raise ValueError("f_ec must be >= 1")
        if not 0 < self.q <= 1:
            raise ValueError("q must lie in (0, 1]")

    def with_(self, **changes) -> "RateModelParams":
        return replace(self, **changes)


def p_multi(mu: float) -> float:
    """Probability that a Poissonian pulse carries two or more photons."""
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    # -expm1 keeps digits for tiny mu where 1 - (1+mu)e^-mu cancels badly
    return -math.expm1(-mu) - mu * math.exp(-mu)


def p_rec(mu: float, eta: float, printed_variant: bool = False) -> float:
    """Probability that Bob registers the pulse: ``1 - exp(-mu eta)``.

    ``printed_variant=True`` returns ``1 - mu eta exp(-mu eta)`` instead, an
    alternative form that does not produce the ``mu_opt ~ eta`` optimum and
    is kept only for comparison.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    x = mu * eta
    if printed_variant:
        return 1.0 - x * math.exp(-x)
    return -math.expm1(-x)


def approx_rate(mu: float, eta: float, printed_variant: bool = False) -> float:
    """Error-free rate estimate ``p_rec - p_multi`` (may be negative)."""
    return p_rec(mu, eta, printed_variant) - p_multi(mu)


def _argmax_log_mu(objective, lo: float, hi: float, grid: int = 241) -> float:
    """Maximize ``objective(mu)`` over ``[lo, hi]`` searching in log(mu).

    A coarse log grid brackets the best point, then bounded Brent polishes it.
    """
    log_grid = np.linspace(math.log(lo), math.log(hi), grid)
    values = np.array([objective(math.exp(x)) for x in log_grid])
    best = int(np.argmax(values))
    a = log_grid[max(best - 1, 0)]
    b = log_grid[min(best + 1, grid - 1)]
    if a == b:
        return math.exp(a)
    res = optimize.minimize_scalar(
        lambda x: -objective(math.exp(x)),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-10},
    )
    x = res.x if -res.fun >= values[best] else log_grid[best]
    return math.exp(x)


def optimize_mu(eta: float, printed_variant: bool = False) -> tuple[float, float]:
    """Intensity maximizing :func:`approx_rate` at transmittance ``eta``.

    Returns ``(mu_opt, G_opt)``.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    mu = _argmax_log_mu(lambda m: approx_rate(m, eta, printed_variant), 1e-9, 10.0)
    return mu, approx_rate(mu, eta, printed_variant)


def binary_entropy(e: float) -> float:
    if not 0 <= e <= 1:
        raise ValueError(f"binary entropy argument must lie in [0, 1], got {e}")
    if e == 0 or e == 1:
        return 0.0
    return -e * math.log2(e) - (1 - e) * math.log2(1 - e)


def single_photon_rate(e: float) -> float:
    """One-way BB84 rate ``1 - 2 H2(e)`` for single photons at error rate ``e``."""
    if not 0 <= e <= 0.5:
        raise ValueError(f"error rate must lie in [0, 0.5], got {e}")
    return 1.0 - 2.0 * binary_entropy(e)


def error_threshold(xtol: float = 1e-12) -> float:
    """Error rate where :func:`single_photon_rate` crosses zero (bisection)."""
    return optimize.bisect(single_photon_rate, 1e-6, 0.5 - 1e-9, xtol=xtol)


def model_gain_qber(params: RateModelParams, mu: float | None = None) -> tuple[float, float]:
    """Gain and QBER of intensity ``mu`` (default ``params.mu``) on a benign channel.

    The QBER is NaN when the gain is zero.
    """
    mu = params.mu if mu is None else mu
    y0, eta, ed = params.dark_count_prob, params.eta, params.misalignment
    signal = -math.expm1(-eta * mu)
    gain = 1.0 - (1.0 - y0) * math.exp(-eta * mu)
    if gain == 0:
        return 0.0, math.nan
    return gain, (0.5 * y0 + ed * signal) / gain


def gllp_rate(params: RateModelParams, bounds=None, *, clamp: bool = True) -> float:
    """GLLP secret key rate per pulse.

    Without ``bounds`` every multi-photon detection is charged to Eve and all
    errors to single photons. With a :class:`~bb84sim.keyrate.decoy.YieldBounds`
    the single-photon gain and error rate come from the decoy estimate.
    """
    gain, qber = model_gain_qber(params)
    if gain == 0:
        return 0.0
    mu = params.mu
    if bounds is None:
        q1 = max(0.0, gain - p_multi(mu))
        e1 = min(0.5, qber * gain / q1) if q1 > 0 else 0.5
    else:
        q1 = max(0.0, bounds.y1_lower) * mu * math.exp(-mu)
        e1 = min(0.5, max(0.0, bounds.e1_upper))
    rate = params.q * (q1 * (1.0 - binary_entropy(e1)) - gain * params.f_ec * binary_entropy(qber))
    return max(0.0, rate) if clamp else rate
