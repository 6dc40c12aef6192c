"""Ground-truth generators for recovery, size, and pipeline tests.

``simulate_var`` realizes the model class under test: Gaussian innovations,
lag coefficient grids B_1..B_p, and a strictly lower-triangular lag-0
coupling grid applied in index order (acyclic instantaneous structure, so
the generating order is well defined).  Orientation convention: entry
B[j][i] is the effect of source i on target j, so the true edge sets are
{(i, j) : B_k[j][i] != 0}.
"""

import json
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from . import _kernels
from .errors import InputError
from .panel import PricePanel, SeriesTable

EPOCH = date(2000, 1, 3)


@dataclass(frozen=True)
class VarGroundTruth:
    names: tuple
    lagged: np.ndarray = field(repr=False)   # (p, K, K)
    lag0: np.ndarray = field(repr=False)     # (K, K), strictly lower triangular
    noise_sd: np.ndarray = field(repr=False)  # (K,)

    def __post_init__(self):
        lagged = np.ascontiguousarray(self.lagged, dtype=np.float64)
        lag0 = np.ascontiguousarray(self.lag0, dtype=np.float64)
        sd = np.ascontiguousarray(self.noise_sd, dtype=np.float64)
        object.__setattr__(self, "lagged", lagged)
        object.__setattr__(self, "lag0", lag0)
        object.__setattr__(self, "noise_sd", sd)
        k = len(self.names)
        if lagged.ndim != 3 or lagged.shape[1:] != (k, k) or lagged.shape[0] < 1:
            raise InputError("lagged coefficients must have shape (p, K, K)")
        if lag0.shape != (k, k):
            raise InputError("lag-0 coefficients must have shape (K, K)")
        if np.any(lag0[np.triu_indices(k)] != 0):
            raise InputError(
                "lag-0 coupling must be strictly lower triangular "
                "(zero diagonal and upper triangle)"
            )
        if sd.shape != (k,) or np.any(sd <= 0):
            raise InputError("innovation standard deviations must be positive")
        rho = self.spectral_radius()
        if rho >= 1.0:
            raise InputError(
                f"unstable system: companion spectral radius {rho:.6f} >= 1"
            )

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def p(self) -> int:
        return self.lagged.shape[0]

    def reduced_form(self) -> np.ndarray:
        """Lag coefficients of the equivalent model with the instantaneous
        block solved out: (I - B0)^-1 B_k."""
        inv = np.linalg.inv(np.eye(self.k) - self.lag0)
        return np.stack([inv @ b for b in self.lagged])

    def spectral_radius(self) -> float:
        """Companion-matrix spectral radius of the reduced form; < 1 means
        the process is stable."""
        k, p = self.k, self.p
        comp = np.zeros((k * p, k * p))
        comp[:k] = np.hstack(list(self.reduced_form()))
        if p > 1:
            comp[k:, :-k] = np.eye(k * (p - 1))
        return float(np.max(np.abs(np.linalg.eigvals(comp))))

    def lagged_edges(self) -> set:
        """(source, target) label pairs with a nonzero coefficient at any
        lag >= 1, excluding self edges."""
        hits = np.any(self.lagged != 0, axis=0)
        return {(self.names[i], self.names[j])
                for j, i in zip(*np.nonzero(hits)) if i != j}

    def instantaneous_edges(self) -> set:
        return {(self.names[i], self.names[j])
                for j, i in zip(*np.nonzero(self.lag0 != 0))}

    def to_json(self) -> str:
        return json.dumps({
            "names": list(self.names),
            "lagged": self.lagged.tolist(),
            "lag0": self.lag0.tolist(),
            "noise_sd": self.noise_sd.tolist(),
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "VarGroundTruth":
        try:
            doc = json.loads(text)
            return cls(
                names=tuple(doc["names"]),
                lagged=np.array(doc["lagged"], dtype=np.float64),
                lag0=np.array(doc["lag0"], dtype=np.float64),
                noise_sd=np.array(doc["noise_sd"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed truth JSON: {exc}") from None


def simulate_var(truth: VarGroundTruth, length: int, burn_in: int,
                 seed: int) -> SeriesTable:
    """Simulate the system and return a SeriesTable of the last ``length``
    observations; deterministic per seed."""
    if length < 2:
        raise InputError("length must be >= 2")
    if burn_in < 0:
        raise InputError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    total = length + burn_in
    innov = rng.standard_normal((total, truth.k)) * truth.noise_sd
    out = np.zeros_like(innov)
    _kernels.var_recursion(truth.lagged, truth.lag0, innov, out)
    stamps = tuple(EPOCH + timedelta(days=t) for t in range(length))
    return SeriesTable(names=truth.names, timestamps=stamps,
                       values=out[burn_in:].T.copy())


def simulate_price_panel(n_assets: int, n_dates: int, dispersion,
                         seed: int, base_price=100.0) -> PricePanel:
    """Positive price panel from exponentiated Gaussian log-returns.

    ``dispersion`` holds the cross-sectional log-return dispersion per
    return step (length n_dates - 1; a scalar is broadcast).  Each step
    shares a common market move, so zero dispersion collapses all assets
    onto one return path.
    """
    if n_assets < 2 or n_dates < 2:
        raise InputError("need at least 2 assets and 2 dates")
    steps = n_dates - 1
    disp = np.asarray(dispersion, dtype=np.float64)
    if disp.ndim == 0:
        disp = np.full(steps, float(disp))
    if disp.shape != (steps,):
        raise InputError(
            f"dispersion schedule must have length {steps}, got {disp.shape}"
        )
    if np.any(disp < 0):
        raise InputError("dispersion values must be >= 0")
    rng = np.random.default_rng(seed)
    common = rng.normal(0.0, 0.01, size=steps)
    idio = rng.standard_normal((n_assets, steps)) * disp
    log_prices = np.cumsum(common + idio, axis=1)
    prices = np.empty((n_assets, n_dates))
    prices[:, 0] = base_price
    prices[:, 1:] = base_price * np.exp(log_prices)
    width = max(3, len(str(n_assets - 1)))
    return PricePanel(
        asset_ids=tuple(f"A{i:0{width}d}" for i in range(n_assets)),
        timestamps=tuple(EPOCH + timedelta(days=t) for t in range(n_dates)),
        prices=prices,
    )


def edge_recovery_score(truth: VarGroundTruth, network) -> dict:
    """Set precision/recall of inferred vs true edges, per kind.

    Empty inferred sets score precision 1.0 with ``zero_denominator`` set;
    the same convention applies to recall when the truth set is empty.
    """
    inferred = {"lagged": set(), "instantaneous": set()}
    for r in network.edges:
        inferred[r.kind].add((r.source, r.target))
    true_sets = {
        "lagged": truth.lagged_edges(),
        "instantaneous": truth.instantaneous_edges(),
    }
    scores = {}
    for kind in ("lagged", "instantaneous"):
        got, want = inferred[kind], true_sets[kind]
        tp = len(got & want)
        scores[kind] = {
            "precision": tp / len(got) if got else 1.0,
            "recall": tp / len(want) if want else 1.0,
            "zero_denominator": not got or not want,
        }
    return scores
