"""Vacuum + weak-decoy estimation of single-photon yield and error rate.

The analytic bound follows the standard two-intensity argument: the vacuum
intensity fixes ``Y0``, and combining the signal (``mu``) and weak decoy
(``nu < mu``) gains so that the two-photon terms cancel leaves only
non-positive higher-order terms, so

    Y1 >= mu / (mu nu - nu^2) * (Q_nu e^nu - Q_mu e^mu nu^2/mu^2 - (mu^2 - nu^2)/mu^2 Y0)
    e1 <= (E_nu Q_nu e^nu - Y0 / 2) / (Y1_lower nu)

:func:`lp_min_y1` is an independent brute-force check: a linear program over
the first few yields that finds the smallest ``Y1`` consistent with every
observed gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..photonics import poisson_pmf
from .formulas import RateModelParams, model_gain_qber, p_multi

METHODS = ("two-intensity-analytic", "lp-oracle", "infinite-decoy-ideal")

# benign channels keep Y1_lower well above half of the yield implied by the signal gain
SUPPRESSION_RATIO = 0.5


@dataclass(frozen=True)
class IntensityObservation:
    mu: float
    gain: float
    qber: float | None
    count: int

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError("intensity mean photon number must be >= 0")
        if not 0 <= self.gain <= 1:
            raise ValueError(f"gain must lie in [0, 1], got {self.gain}")
        if self.qber is not None and not 0 <= self.qber <= 1:
            raise ValueError(f"qber must lie in [0, 1], got {self.qber}")
        if self.count <= 0:
            raise ValueError("sample count must be positive")


@dataclass(frozen=True)
class DecoyObservations:
    by_label: dict[str, IntensityObservation] = field(default_factory=dict)

    def split(self) -> tuple[IntensityObservation, IntensityObservation, IntensityObservation]:
        """Return (signal, weak decoy, vacuum); refuse anything else."""
        if "signal" not in self.by_label:
            raise ValueError("observations lack the 'signal' intensity")
        signal = self.by_label["signal"]
        vacua = [o for k, o in self.by_label.items() if k != "signal" and o.mu == 0]
        decoys = [o for k, o in self.by_label.items() if k != "signal" and o.mu > 0]
        if not vacua:
            raise ValueError("observations lack a vacuum intensity (mu = 0)")
        if len(decoys) != 1:
            raise ValueError(f"need exactly one weak decoy intensity, got {len(decoys)}")
        decoy = decoys[0]
        if not 0 < decoy.mu < signal.mu:
            raise ValueError(
                f"intensity ordering violated: need 0 < nu < mu, got nu={decoy.mu}, mu={signal.mu}"
            )
        return signal, decoy, vacua[0]


@dataclass(frozen=True)
class YieldBounds:
    y1_lower: float
    e1_upper: float
    method: str
    vacuous: bool = False
    suppression_flag: bool = False

    def to_dict(self) -> dict:
        return {
            "Y1_lower": self.y1_lower,
            "e1_upper": self.e1_upper,
            "method": self.method,
            "vacuous": self.vacuous,
            "suppression_flag": self.suppression_flag,
        }


def _implied_benign_y1(signal: IntensityObservation, y0: float) -> float:
    """Single-photon yield a benign channel would need to produce the signal gain."""
    if signal.mu == 0 or signal.gain >= 1:
        return 1.0
    ratio = (1.0 - signal.gain) / (1.0 - y0) if y0 < 1 else 1.0
    if ratio >= 1:
        return y0
    eta = -math.log(ratio) / signal.mu
    return y0 + min(1.0, eta) * (1.0 - y0)


def analytic_y1_lower(signal: IntensityObservation, decoy: IntensityObservation, y0: float) -> float:
    mu, nu = signal.mu, decoy.mu
    return (mu / (mu * nu - nu * nu)) * (
        decoy.gain * math.exp(nu)
        - signal.gain * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )


def decoy_bounds(obs: DecoyObservations) -> YieldBounds:
    """Two-intensity analytic lower bound on Y1 and upper bound on e1.

    The decoy bound is combined with the no-decoy bound
    ``Y1 >= (Q_mu - p_multi(mu)) / (mu e^-mu)`` (also sound), so adding decoy
    data never lowers the estimate.
    """
    signal, decoy, vacuum = obs.split()
    y0 = vacuum.gain
    mu, nu = signal.mu, decoy.mu

    y1_decoy = analytic_y1_lower(signal, decoy, y0)
    y1_plain = (signal.gain - p_multi(mu)) / (mu * math.exp(-mu))
    y1 = max(y1_decoy, y1_plain)
    vacuous = y1 <= 0
    y1 = min(1.0, max(0.0, y1))

    if vacuous:
        e1 = 0.5
    else:
        e1 = 0.5
        if decoy.qber is not None:
            e1 = (decoy.qber * decoy.gain * math.exp(nu) - 0.5 * y0) / (y1 * nu)
        if signal.qber is not None:
            e1_signal = (signal.qber * signal.gain * math.exp(mu) - 0.5 * y0) / (y1 * mu)
            e1 = min(e1, e1_signal)
        e1 = min(0.5, max(0.0, e1))

    suppressed = y1 < SUPPRESSION_RATIO * _implied_benign_y1(signal, y0)
    return YieldBounds(y1, e1, "two-intensity-analytic", vacuous, suppressed)


def ideal_bounds(params: RateModelParams) -> YieldBounds:
    """Infinite-decoy limit: the exact single-photon yield and error rate of the model."""
    y0, eta = params.dark_count_prob, params.eta
    y1 = y0 + eta * (1.0 - y0)
    e1 = (0.5 * y0 + params.misalignment * eta) / y1 if y1 > 0 else 0.5
    return YieldBounds(y1, min(0.5, e1), "infinite-decoy-ideal")


def model_observations(
    params: RateModelParams, nu: float, count: int = 1
) -> DecoyObservations:
    """Noise-free observations (signal, weak decoy, vacuum) from the benign model."""
    out = {}
    for label, lam in (("signal", params.mu), ("decoy", nu), ("vacuum", 0.0)):
        gain, qber = model_gain_qber(params, lam)
        out[label] = IntensityObservation(lam, gain, None if math.isnan(qber) else qber, count)
    return DecoyObservations(out)


def true_single_photon(params: RateModelParams) -> tuple[float, float]:
    """Exact (Y1, e1) of the benign model."""
    b = ideal_bounds(params)
    return b.y1_lower, b.e1_upper


def lp_min_y1(obs: DecoyObservations, n_max: int = 20) -> float:
    """Smallest Y1 consistent with all observed gains (brute-force LP oracle).

    Variables are ``Y_0..Y_{n_max}`` in [0, 1]. For every intensity the
    truncated sum must explain the observed gain up to the unknown tail
    ``sum_{n > n_max} P_n Y_n``, which lies in ``[0, tail]``.
    """
    rows_ub, rhs_ub = [], []
    for o in obs.by_label.values():
        probs = np.array([poisson_pmf(o.mu, n) for n in range(n_max + 1)])
        tail = max(0.0, 1.0 - probs.sum())
        rows_ub.append(probs)
        rhs_ub.append(o.gain)
        rows_ub.append(-probs)
        rhs_ub.append(-(o.gain - tail))
    c = np.zeros(n_max + 1)
    c[1] = 1.0
    res = optimize.linprog(
        c,
        A_ub=np.array(rows_ub),
        b_ub=np.array(rhs_ub),
        bounds=[(0.0, 1.0)] * (n_max + 1),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"yield LP failed: {res.message}")
    return float(res.x[1])


def lp_bounds(obs: DecoyObservations, n_max: int = 20) -> YieldBounds:
    y1 = lp_min_y1(obs, n_max)
    signal, _, vacuum = obs.split()
    e1 = 0.5
    if y1 > 0 and signal.qber is not None:
        e1 = (signal.qber * signal.gain * math.exp(signal.mu) - 0.5 * vacuum.gain) / (y1 * signal.mu)
    return YieldBounds(y1, min(0.5, max(0.0, e1)), "lp-oracle", y1 <= 0)
