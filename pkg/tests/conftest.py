from datetime import date, timedelta

import numpy as np
import pytest

from fcinet.panel import SeriesTable
from fcinet.synth import VarGroundTruth

EPOCH = date(2000, 1, 3)


def daily_stamps(n):
    return tuple(EPOCH + timedelta(days=t) for t in range(n))


def make_table(values, names=None):
    """SeriesTable from a K x T array with synthetic daily dates."""
    values = np.asarray(values, dtype=np.float64)
    if names is None:
        names = tuple(f"S{i}" for i in range(values.shape[0]))
    return SeriesTable(names=tuple(names), timestamps=daily_stamps(values.shape[1]),
                       values=values)


def write_csv(path, names, stamps, values):
    """Plain CSV writer independent of the package's own writer."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["date", *names]) + "\n")
        for j, stamp in enumerate(stamps):
            fh.write(",".join([str(stamp)]
                             + [repr(float(v)) for v in values[:, j]]) + "\n")


@pytest.fixture
def bivariate_link_truth():
    """x drives y with one lag; no instantaneous coupling."""
    return VarGroundTruth(
        names=("x", "y"),
        lagged=np.array([[[0.5, 0.0], [0.9, 0.0]]]),
        lag0=np.zeros((2, 2)),
        noise_sd=np.ones(2),
    )


@pytest.fixture
def diagonal_truth():
    """Two independent AR(1) series; the all-null system."""
    return VarGroundTruth(
        names=("u", "v"),
        lagged=np.array([[[0.5, 0.0], [0.0, 0.5]]]),
        lag0=np.zeros((2, 2)),
        noise_sd=np.ones(2),
    )


@pytest.fixture
def recovery_truth():
    """Five-variable system whose structural edges equal the population
    causal estimands: the lag-0 receiver E has no own dynamics, so no
    reverse lagged effects are induced by conditioning on lag-0 terms."""
    k = 5
    lag = np.zeros((1, k, k))
    for v in range(4):
        lag[0, v, v] = 0.5
    lag[0, 1, 0] = 0.4
    lag[0, 2, 1] = 0.35
    lag[0, 3, 2] = 0.3
    lag0 = np.zeros((k, k))
    lag0[4, 0] = 0.6
    return VarGroundTruth(names=tuple("ABCDE"), lagged=lag, lag0=lag0,
                          noise_sd=np.ones(k))
