"""Extended Granger causality: variance-ratio measures, bootstrap
significance, and the resulting directed network.

For source i and target j the unrestricted equation contains every lag and
lag-0 term allowed by the model spec; the restricted equation removes the
block under test (source lags for the lagged kind, the source's lag-0 term
for the instantaneous kind, both for the total kind, or the target's own
lags for self-dependence).  The measure is

    ln( sigma^2_restricted / sigma^2_unrestricted )

with maximum-likelihood variances on a common sample, which is non-negative
because the models are nested.  (The ratio is oriented restricted-over-
unrestricted precisely so that non-negativity holds.)

Significance comes from a fixed-design residual bootstrap under the null:
surrogate responses are the restricted fitted values plus resampled
restricted residuals, with every regressor column (including the target's
own lags) held fixed, and the measure is recomputed per surrogate against
the same pair of designs.  p = (1 + #{measure* >= measure}) / (B + 1), so
p is never zero and ties count as exceedances.
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError
from .panel import SeriesTable
from .varmodel import INSTANTANEOUS, LAGGED, VarSpec, build_design

KIND_LAGGED = "lagged"
KIND_INSTANTANEOUS = "instantaneous"
KIND_TOTAL = "total"
KIND_SELF = "self"
KINDS = (KIND_LAGGED, KIND_INSTANTANEOUS, KIND_TOTAL, KIND_SELF)

SCHEME_RESAMPLE = "resample"
SCHEME_PERMUTATION = "permutation"

_VARIANCE_FLOOR = 1e-300


@dataclass(frozen=True)
class EgcResult:
    source: str
    target: str
    kind: str
    measure: float
    restricted_variance: float
    unrestricted_variance: float
    p_value: float = None
    bootstrap_count: int = 0


@dataclass(frozen=True)
class CausalNetwork:
    """Edges and self-loops retained at the chosen significance level."""

    nodes: tuple
    alpha: float
    edges: tuple        # EgcResult with kind lagged/instantaneous, p <= alpha
    self_loops: tuple   # EgcResult with kind self, p <= alpha
    results: tuple = field(default=(), repr=False)  # every computed result


def _exclusions_for(kind, source, target):
    if kind == KIND_LAGGED:
        return frozenset({(source, LAGGED)})
    if kind == KIND_INSTANTANEOUS:
        return frozenset({(source, INSTANTANEOUS)})
    if kind == KIND_TOTAL:
        return frozenset({(source, LAGGED), (source, INSTANTANEOUS)})
    if kind == KIND_SELF:
        return frozenset({(target, LAGGED)})
    raise InputError(f"unknown causality kind {kind!r}; expected one of {KINDS}")


def _resolve(table, which):
    return which if isinstance(which, int) else table.index_of(which)


def _orthonormal_basis(x, ref_scale=None):
    """Orthonormal basis of the column space, truncated at numerical rank.

    ``ref_scale`` supplies the magnitude the columns had before any
    orthogonalization, so directions that are pure cancellation residue
    (e.g. a constant column projected against the intercept) are dropped
    instead of passing a threshold relative to their own dust.
    """
    q, r, _ = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return q[:, :0]
    scale = diag[0] if ref_scale is None else max(diag[0], ref_scale)
    if scale == 0.0:
        return q[:, :0]
    rank = int(np.sum(diag > max(x.shape) * np.finfo(np.float64).eps * scale))
    return q[:, :rank]


class _NestedFit:
    """Shared least-squares machinery for one (source, target, kind) cell.

    Factors the restricted design once and the unrestricted extra columns
    once (orthogonalized against the restricted ones), so each response -
    observed or surrogate - costs only a few matrix-vector products.  The
    construction guarantees rss_unrestricted <= rss_restricted numerically.
    """

    def __init__(self, table, source, target, spec, kind):
        if kind not in KINDS:
            raise InputError(f"unknown causality kind {kind!r}")
        if kind == KIND_SELF:
            if source != target:
                raise InputError("self-dependence requires source == target")
        elif source == target:
            raise InputError(f"source and target must differ for kind {kind!r}")
        if kind in (KIND_INSTANTANEOUS, KIND_TOTAL) and not spec.include_instantaneous:
            raise InputError(
                f"kind {kind!r} requires the instantaneous block to be enabled"
            )

        excl = _exclusions_for(kind, source, target)
        x_full, y, regs_full = build_design(table, target, spec)
        x_restr, y2, regs_restr = build_design(table, target, spec, exclusions=excl)
        assert np.array_equal(y, y2)  # identical row window by construction

        dropped = set(regs_full) - set(regs_restr)
        extra_cols = [c for c, reg in enumerate(regs_full) if reg in dropped]
        # pivoted QR truncated at numerical rank, so exactly collinear
        # designs (constant series + intercept, say) project onto the true
        # column space rather than arbitrary directions
        self.q_restr = _orthonormal_basis(x_restr)
        extra = x_full[:, extra_cols]
        w = extra - self.q_restr @ (self.q_restr.T @ extra)
        extra_scale = float(np.linalg.norm(extra, axis=0).max()) if extra.size else 0.0
        self.q_extra = _orthonormal_basis(w, ref_scale=extra_scale)
        self.y = y
        self.t_eff = len(y)

    def variances(self, y):
        resid_restr = y - self.q_restr @ (self.q_restr.T @ y)
        rss_restr = float(resid_restr @ resid_restr)
        proj = self.q_extra.T @ resid_restr
        rss_full = max(rss_restr - float(proj @ proj), 0.0)
        return rss_restr / self.t_eff, rss_full / self.t_eff

    def measure(self, y):
        var_r, var_u = self.variances(y)
        return float(np.log(max(var_r, _VARIANCE_FLOOR)
                            / max(var_u, _VARIANCE_FLOOR))), var_r, var_u

    def restricted_fit(self, y):
        fitted = self.q_restr @ (self.q_restr.T @ y)
        return fitted, y - fitted


def egc_measure(table: SeriesTable, source, target, spec: VarSpec,
                kind: str) -> EgcResult:
    """Causal measure for one ordered pair and kind (no p-value)."""
    i, j = _resolve(table, source), _resolve(table, target)
    nested = _NestedFit(table, i, j, spec, kind)
    m, var_r, var_u = nested.measure(nested.y)
    return EgcResult(
        source=table.names[i], target=table.names[j], kind=kind,
        measure=m, restricted_variance=var_r, unrestricted_variance=var_u,
    )


def _stream_entropy(seed, source_name, target_name, kind):
    """Stable per-relation entropy words keyed by series names, so column
    reordering permutes bootstrap results instead of changing them."""
    digest = hashlib.sha256(
        f"{seed}|{source_name}|{target_name}|{kind}".encode()
    ).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little")
                 for i in range(0, 16, 4))


def bootstrap_p(table: SeriesTable, source, target, spec: VarSpec, kind: str,
                n_boot: int, seed: int,
                scheme: str = SCHEME_RESAMPLE) -> EgcResult:
    """Causal measure with a bootstrap p-value under the exclusion null.

    Replicate b draws its random stream from (seed, source, target, kind, b)
    - with the relation identified by series names - so results do not
    depend on execution order, thread count, or column layout.  ``scheme``
    picks how restricted residuals are reshuffled: iid resampling with
    replacement (default) or a plain permutation.
    """
    if n_boot < 1:
        raise InputError(f"bootstrap replication count must be >= 1, got {n_boot}")
    if scheme not in (SCHEME_RESAMPLE, SCHEME_PERMUTATION):
        raise InputError(f"unknown bootstrap scheme {scheme!r}")
    i, j = _resolve(table, source), _resolve(table, target)
    nested = _NestedFit(table, i, j, spec, kind)
    m_obs, var_r, var_u = nested.measure(nested.y)
    fitted, resid = nested.restricted_fit(nested.y)

    entropy = _stream_entropy(seed, table.names[i], table.names[j], kind)
    exceed = 0
    t_eff = nested.t_eff
    for b in range(n_boot):
        rng = np.random.default_rng(np.random.SeedSequence((*entropy, b)))
        if scheme == SCHEME_RESAMPLE:
            idx = rng.integers(0, t_eff, size=t_eff)
        else:
            idx = rng.permutation(t_eff)
        m_star, _, _ = nested.measure(fitted + resid[idx])
        if m_star >= m_obs:
            exceed += 1
    p = (1 + exceed) / (n_boot + 1)
    return EgcResult(
        source=table.names[i], target=table.names[j], kind=kind,
        measure=m_obs, restricted_variance=var_r, unrestricted_variance=var_u,
        p_value=p, bootstrap_count=n_boot,
    )


def _network_tasks(k, include_instantaneous):
    tasks = []
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            tasks.append((i, j, KIND_LAGGED))
            if include_instantaneous:
                tasks.append((i, j, KIND_INSTANTANEOUS))
    tasks.extend((j, j, KIND_SELF) for j in range(k))
    return tasks


def all_egc_results(table: SeriesTable, spec: VarSpec, n_boot: int, seed: int,
                    scheme: str = SCHEME_RESAMPLE, threads: int = 1):
    """Bootstrap every ordered pair (lagged and instantaneous kinds) plus
    every node's self-dependence; deterministic for a given seed regardless
    of ``threads``."""
    tasks = _network_tasks(table.n_series, spec.include_instantaneous)

    def run(task):
        i, j, kind = task
        return bootstrap_p(table, i, j, spec, kind, n_boot, seed, scheme)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    return tuple(results)


def assemble_network(results, nodes, alpha: float) -> CausalNetwork:
    """Keep edges and self-loops whose bootstrap p-value is <= alpha."""
    if not 0 < alpha <= 1:
        raise InputError(f"alpha must be in (0, 1], got {alpha}")
    edges = tuple(r for r in results
                  if r.kind in (KIND_LAGGED, KIND_INSTANTANEOUS)
                  and r.p_value is not None and r.p_value <= alpha)
    loops = tuple(r for r in results
                  if r.kind == KIND_SELF
                  and r.p_value is not None and r.p_value <= alpha)
    return CausalNetwork(nodes=tuple(nodes), alpha=alpha, edges=edges,
                         self_loops=loops, results=tuple(results))


def egc_network(table: SeriesTable, spec: VarSpec, alpha: float, n_boot: int,
                seed: int, scheme: str = SCHEME_RESAMPLE,
                threads: int = 1) -> CausalNetwork:
    """Full network inference at significance level ``alpha``."""
    results = all_egc_results(table, spec, n_boot, seed, scheme, threads)
    return assemble_network(results, table.names, alpha)


def egc_heatmaps(source, kind: str = KIND_LAGGED, nodes=None):
    """K x K (measure, probability) matrices for one causal kind.

    Entry (i, j) of the measure matrix is the measure from node j to node i;
    the probability matrix holds 1 - p.  Diagonals carry the self-dependence
    entries.  ``source`` is a CausalNetwork (absent relations are zero) or an
    iterable of EgcResult (then ``nodes`` fixes the ordering).
    """
    if kind not in (KIND_LAGGED, KIND_INSTANTANEOUS):
        raise InputError("heatmaps are defined for kinds 'lagged' and 'instantaneous'")
    if isinstance(source, CausalNetwork):
        nodes = source.nodes
        entries = list(source.edges) + list(source.self_loops)
    else:
        if nodes is None:
            raise InputError("nodes required when passing raw results")
        entries = list(source)
    index = {name: pos for pos, name in enumerate(nodes)}
    k = len(nodes)
    measures = np.zeros((k, k))
    probs = np.zeros((k, k))
    for r in entries:
        if r.kind == kind:
            row, col = index[r.target], index[r.source]
        elif r.kind == KIND_SELF:
            row = col = index[r.target]
        else:
            continue
        measures[row, col] = r.measure
        if r.p_value is not None:
            probs[row, col] = 1.0 - r.p_value
    return measures, probs


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def network_to_json(net: CausalNetwork, meta=None) -> str:
    doc = {
        "nodes": list(net.nodes),
        "alpha": net.alpha,
        "edges": [
            {"src": r.source, "dst": r.target, "kind": r.kind,
             "measure": r.measure, "p": r.p_value}
            for r in net.edges
        ],
        "self": [
            {"node": r.target, "measure": r.measure, "p": r.p_value}
            for r in net.self_loops
        ],
    }
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True)


def network_from_json(text: str) -> CausalNetwork:
    try:
        doc = json.loads(text)
        nodes = tuple(doc["nodes"])
        alpha = float(doc["alpha"])
        edges = tuple(
            EgcResult(source=e["src"], target=e["dst"], kind=e["kind"],
                      measure=float(e["measure"]),
                      restricted_variance=np.nan, unrestricted_variance=np.nan,
                      p_value=e["p"])
            for e in doc["edges"]
        )
        loops = tuple(
            EgcResult(source=s["node"], target=s["node"], kind=KIND_SELF,
                      measure=float(s["measure"]),
                      restricted_variance=np.nan, unrestricted_variance=np.nan,
                      p_value=s["p"])
            for s in doc["self"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed network JSON: {exc}") from None
    for e in edges:
        if e.kind not in (KIND_LAGGED, KIND_INSTANTANEOUS):
            raise InputError(f"malformed network JSON: bad edge kind {e.kind!r}")
    return CausalNetwork(nodes=nodes, alpha=alpha, edges=edges,
                         self_loops=loops)
