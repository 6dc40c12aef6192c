"""Joint hypothesis tests for market efficiency.

Two combination rules over per-relation bootstrap p-values:

* Bonferroni min-p: reject the joint null of m components when
  min(p) <= alpha / m.
* Fisher: T = -2 sum ln(p_k) referred to a chi-square law with 2m degrees
  of freedom; reject when the combined tail probability is <= alpha.

Fisher's rule assumes independent component p-values; reports carry that
caveat instead of applying a dependence correction.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .errors import InputError
from .egc import KIND_LAGGED, bootstrap_p

METHOD_BONFERRONI = "bonferroni"
METHOD_FISHER = "fisher"

REJECT = "reject"
FAIL_TO_REJECT = "fail_to_reject"

FISHER_CAVEAT = (
    "Fisher combination assumes independent component p-values; no "
    "dependence correction is applied."
)


@dataclass(frozen=True)
class HypothesisReport:
    components: tuple      # (label, p_value) pairs, input order preserved
    method: str
    alpha: float
    decision: str
    statistic: float = None        # Fisher only
    degrees_of_freedom: int = None  # Fisher only
    joint_p: float = None          # Fisher only
    caveat: str = None

    def to_json(self, meta=None) -> str:
        doc = {
            "components": [{"label": lbl, "p_value": p}
                           for lbl, p in self.components],
            "method": self.method,
            "alpha": self.alpha,
            "decision": self.decision,
        }
        if self.method == METHOD_FISHER:
            doc.update(statistic=self.statistic,
                       degrees_of_freedom=self.degrees_of_freedom,
                       joint_p=self.joint_p, caveat=self.caveat)
        if meta is not None:
            doc["meta"] = meta
        return json.dumps(doc, indent=2, sort_keys=True)

    def summary(self) -> str:
        if self.method == METHOD_FISHER:
            return (f"fisher: T={self.statistic:.3f} df={self.degrees_of_freedom} "
                    f"joint_p={self.joint_p:.4g} alpha={self.alpha:g} "
                    f"-> {self.decision}")
        m = len(self.components)
        min_p = min(p for _, p in self.components)
        return (f"bonferroni: min_p={min_p:.4g} threshold={self.alpha / m:.4g} "
                f"(alpha={self.alpha:g}, m={m}) -> {self.decision}")


def chisq_sf(x: float, k: int) -> float:
    """Upper-tail chi-square probability Q(k/2, x/2) via the regularized
    incomplete gamma function."""
    if not x >= 0:
        raise InputError(f"chi-square statistic must be >= 0, got {x}")
    if k < 1:
        raise InputError(f"degrees of freedom must be >= 1, got {k}")
    return float(gammaincc(k / 2.0, x / 2.0))


def _check_pvalues(p_values):
    p_values = [float(p) for p in p_values]
    if not p_values:
        raise InputError("need at least one p-value")
    for p in p_values:
        if not 0 < p <= 1:
            raise InputError(f"p-values must lie in (0, 1], got {p}")
    return p_values


def _label(labels, count):
    if labels is None:
        return [f"H{idx + 1}" for idx in range(count)]
    labels = [str(lbl) for lbl in labels]
    if len(labels) != count:
        raise InputError("label count does not match p-value count")
    return labels


def bonferroni_joint(p_values, alpha: float, labels=None) -> HypothesisReport:
    """Reject the joint null iff min(p) <= alpha / m."""
    p_values = _check_pvalues(p_values)
    labels = _label(labels, len(p_values))
    m = len(p_values)
    decision = REJECT if min(p_values) <= alpha / m else FAIL_TO_REJECT
    return HypothesisReport(
        components=tuple(zip(labels, p_values)),
        method=METHOD_BONFERRONI, alpha=alpha, decision=decision,
    )


def fisher_joint(p_values, alpha: float, labels=None) -> HypothesisReport:
    """Fisher combination: -2 sum ln(p) against chi-square with 2m df."""
    p_values = _check_pvalues(p_values)
    labels = _label(labels, len(p_values))
    stat = -2.0 * sum(math.log(p) for p in p_values)
    df = 2 * len(p_values)
    joint_p = chisq_sf(stat, df)
    decision = REJECT if joint_p <= alpha else FAIL_TO_REJECT
    return HypothesisReport(
        components=tuple(zip(labels, p_values)),
        method=METHOD_FISHER, alpha=alpha, decision=decision,
        statistic=stat, degrees_of_freedom=df, joint_p=joint_p,
        caveat=FISHER_CAVEAT,
    )


def emh_test(table, target, news, spec, alpha: float, n_boot: int, seed: int,
             method: str = METHOD_BONFERRONI, scheme: str = "resample",
             threads: int = 1) -> HypothesisReport:
    """Joint test that no news series strictly (h > 0) drives the target.

    Computes a lagged-kind bootstrap p-value for each news -> target
    relation inside the full joint system, then combines them with the
    chosen method.  The component labels record the tested relations;
    ``threads`` only parallelizes across relations and never changes the
    result.
    """
    news = list(news)
    if not news:
        raise InputError("need at least one news series")
    if method not in (METHOD_BONFERRONI, METHOD_FISHER):
        raise InputError(f"unknown method {method!r}")
    target_idx = table.index_of(target) if isinstance(target, str) else target
    target_name = table.names[target_idx]

    def run(src):
        return bootstrap_p(table, src, target_name, spec, KIND_LAGGED,
                           n_boot, seed, scheme)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, news))
    else:
        results = [run(src) for src in news]
    labels = [f"{r.source}->{r.target} (h>0)" for r in results]
    p_values = [r.p_value for r in results]
    combine = bonferroni_joint if method == METHOD_BONFERRONI else fisher_joint
    return combine(p_values, alpha, labels=labels)
