"""Optimized key rate versus fiber distance, with and without decoy states."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decoy import decoy_bounds, ideal_bounds, model_observations
from .formulas import RateModelParams, _argmax_log_mu, gllp_rate, model_gain_qber

MODES = ("nondecoy", "decoy-ideal", "decoy-two")
CSV_COLUMNS = ("distance_km", "eta", "mu_opt", "Q", "E", "R_nondecoy", "R_decoy_ideal", "R_decoy_two")


@dataclass(frozen=True)
class SweepTemplate:
    """Fixed hardware parameters for a distance sweep.

    ``params.mu`` and ``params.eta`` are overwritten per grid point.
    """

    params: RateModelParams = RateModelParams(f_ec=1.22, q=0.5)
    attenuation_db_per_km: float = 0.21
    detector_efficiency: float = 0.1
    decoy_nu: float = 0.1


def eta_at(distance_km: float, template: SweepTemplate) -> float:
    return template.detector_efficiency * 10.0 ** (-template.attenuation_db_per_km * distance_km / 10.0)


def rate_for_mode(params: RateModelParams, mode: str, decoy_nu: float = 0.1) -> float:
    if mode == "nondecoy":
        return gllp_rate(params, clamp=False)
    if mode == "decoy-ideal":
        return gllp_rate(params, ideal_bounds(params), clamp=False)
    if mode == "decoy-two":
        if params.mu <= decoy_nu:
            return -math.inf
        bounds = decoy_bounds(model_observations(params, decoy_nu))
        return gllp_rate(params, bounds, clamp=False)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def optimize_rate(params: RateModelParams, mode: str, decoy_nu: float = 0.1) -> tuple[float, float]:
    """Best ``(mu, R)`` for one mode at the transmittance in ``params``; R is clamped at 0."""
    lo = 1e-6 if mode != "decoy-two" else decoy_nu * (1 + 1e-6)

    def objective(mu: float) -> float:
        return rate_for_mode(params.with_(mu=mu), mode, decoy_nu)

    mu = _argmax_log_mu(objective, lo, 1.0)
    return mu, max(0.0, objective(mu))


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    eta: float
    mu_opt: float
    Q: float
    E: float
    R_nondecoy: float
    R_decoy_ideal: float
    R_decoy_two: float

    def rate(self, mode: str) -> float:
        return {"nondecoy": self.R_nondecoy, "decoy-ideal": self.R_decoy_ideal, "decoy-two": self.R_decoy_two}[mode]


def sweep_point(distance_km: float, template: SweepTemplate, mode: str = "nondecoy") -> SweepRow:
    eta = eta_at(distance_km, template)
    base = template.params.with_(eta=eta)
    rates, mus = {}, {}
    for m in MODES:
        mus[m], rates[m] = optimize_rate(base, m, template.decoy_nu)
    gain, qber = model_gain_qber(base.with_(mu=mus[mode]))
    return SweepRow(
        distance_km, eta, mus[mode], gain, qber,
        rates["nondecoy"], rates["decoy-ideal"], rates["decoy-two"],
    )


def _point_args(args):
    return sweep_point(*args)


def sweep_rates(
    distances, template: SweepTemplate = SweepTemplate(), mode: str = "nondecoy", workers: int = 1
) -> list[SweepRow]:
    """Rate table over a monotone distance grid.

    Every row carries all three rate columns, each at its own optimal
    intensity; ``mu_opt``, ``Q`` and ``E`` describe the optimum of ``mode``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    distances = [float(d) for d in distances]
    if not distances:
        raise ValueError("empty distance grid")
    if any(b <= a for a, b in zip(distances, distances[1:])):
        raise ValueError("distance grid must be strictly increasing")
    args = [(d, template, mode) for d in distances]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_args, args))
    return [_point_args(a) for a in args]


def cutoff_distance(rows: list[SweepRow], mode: str) -> float | None:
    """First grid distance at which the rate of ``mode`` is zero (None if never)."""
    for row in rows:
        if row.rate(mode) <= 0:
            return row.distance_km
    return None


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([repr(float(getattr(r, c))) for c in CSV_COLUMNS])
    return buf.getvalue()
