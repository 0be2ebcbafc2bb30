import csv
import io

import numpy as np
import pytest

from bb84sim.keyrate import (
    CSV_COLUMNS,
    RateModelParams,
    SweepTemplate,
    cutoff_distance,
    eta_at,
    loglog_slope,
    optimize_mu,
    optimize_rate,
    rows_to_csv,
    sweep_rates,
)

REALISTIC = SweepTemplate(RateModelParams(dark_count_prob=1e-5, misalignment=0.01, f_ec=1.22, q=0.5), 0.21, 0.1, 0.1)
NOISELESS = RateModelParams(dark_count_prob=0.0, misalignment=0.0, f_ec=1.0, q=0.5)


@pytest.fixture(scope="module")
def realistic_rows():
    return sweep_rates(np.arange(0, 201, 2.0), REALISTIC)


def test_csv_shape_and_header():
    rows = sweep_rates(np.arange(0, 101, 1.0), REALISTIC)
    text = rows_to_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert len(parsed) == 102
    assert float(parsed[1][0]) == 0.0 and float(parsed[-1][0]) == 100.0
    assert text == rows_to_csv(sweep_rates(np.arange(0, 101, 1.0), REALISTIC))


def test_decoy_dominates_and_cutoffs(realistic_rows):
    for r in realistic_rows:
        assert r.R_decoy_ideal >= r.R_nondecoy
        assert r.R_decoy_ideal >= r.R_decoy_two - 1e-15
    nondecoy = cutoff_distance(realistic_rows, "nondecoy")
    decoy = cutoff_distance(realistic_rows, "decoy-ideal")
    assert nondecoy is not None and decoy is not None
    assert decoy > nondecoy
    assert cutoff_distance(realistic_rows, "decoy-two") > nondecoy


def test_columns_follow_requested_mode():
    row_nd = sweep_rates([30.0], REALISTIC, mode="nondecoy")[0]
    row_di = sweep_rates([30.0], REALISTIC, mode="decoy-ideal")[0]
    assert row_nd.R_decoy_ideal == row_di.R_decoy_ideal
    assert row_di.mu_opt > 5 * row_nd.mu_opt


def test_grid_validation():
    with pytest.raises(ValueError):
        sweep_rates([], REALISTIC)
    with pytest.raises(ValueError):
        sweep_rates([10.0, 5.0], REALISTIC)
    with pytest.raises(ValueError):
        sweep_rates([1.0], REALISTIC, mode="bogus")


def test_parallel_rows_keep_grid_order():
    grid = [0.0, 25.0, 50.0, 75.0]
    assert sweep_rates(grid, REALISTIC, workers=2) == sweep_rates(grid, REALISTIC)


def _rates_over_eta(mode, etas):
    return [optimize_rate(NOISELESS.with_(eta=float(e)), mode)[1] for e in etas]


def test_nondecoy_rate_quadratic_in_eta():
    etas = np.logspace(-3, -1, 9)
    assert loglog_slope(etas, _rates_over_eta("nondecoy", etas)) == pytest.approx(2.0, abs=0.1)
    # the approximate rate scales the same way
    assert loglog_slope(etas, [optimize_mu(e)[1] for e in etas]) == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("mode", ["decoy-ideal", "decoy-two"])
def test_decoy_rate_linear_in_eta(mode):
    etas = np.logspace(-3, -1, 9)
    assert loglog_slope(etas, _rates_over_eta(mode, etas)) == pytest.approx(1.0, abs=0.1)


def test_eta_at():
    assert eta_at(0.0, REALISTIC) == pytest.approx(0.1)
    assert eta_at(100 / 2.1, REALISTIC) == pytest.approx(0.01)
