"""Graph diagnostics for the significant causal network.

All metrics are computed on the simple directed graph with self-loops set
aside (they never enter the statistics below).  Metrics are topology-only
by default; HITS and PageRank accept a ``weighted`` flag that uses the
stored edge weights instead of 0/1 adjacency.  Path-based metrics
(betweenness, diameter, average path length) are always unweighted.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InputError

HITS_TOL = 1e-12
PAGERANK_TOL = 1e-12
MAX_ITERS = 10000


@dataclass(frozen=True)
class DirectedGraph:
    labels: tuple
    edges: tuple                     # sorted (src, dst) index pairs, no dups
    self_loops: tuple = ()           # node indices kept out of all metrics
    weights: tuple = None            # parallel to edges when present

    def __post_init__(self):
        n = len(self.labels)
        seen = set()
        for s, d in self.edges:
            if not (0 <= s < n and 0 <= d < n):
                raise InputError(f"edge ({s}, {d}) out of range")
            if s == d:
                raise InputError("self-loops belong in self_loops, not edges")
            if (s, d) in seen:
                raise InputError(f"duplicate edge ({s}, {d})")
            seen.add((s, d))
        if list(self.edges) != sorted(self.edges):
            raise InputError("edge list must be sorted")
        if self.weights is not None and len(self.weights) != len(self.edges):
            raise InputError("weights must parallel edges")

    @property
    def n(self) -> int:
        return len(self.labels)

    def adjacency(self, weighted=False) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for pos, (s, d) in enumerate(self.edges):
            a[s, d] = self.weights[pos] if weighted and self.weights else 1.0
        return a


@dataclass(frozen=True)
class NodeStats:
    labels: tuple
    authority: np.ndarray = field(repr=False)
    hub: np.ndarray = field(repr=False)
    pagerank: np.ndarray = field(repr=False)
    betweenness: np.ndarray = field(repr=False)
    bridging: np.ndarray = field(repr=False)


def from_causal_network(net, kinds=("lagged", "instantaneous")) -> DirectedGraph:
    """Collapse retained edges of the selected kinds into a simple digraph;
    multiple kinds between one ordered pair merge into a single edge whose
    weight is the largest measure."""
    kinds = set(kinds)
    index = {name: pos for pos, name in enumerate(net.nodes)}
    best = {}
    for r in net.edges:
        if r.kind in kinds:
            key = (index[r.source], index[r.target])
            if key not in best or r.measure > best[key]:
                best[key] = r.measure
    pairs = sorted(best)
    loops = tuple(sorted(index[r.target] for r in net.self_loops))
    return DirectedGraph(
        labels=tuple(net.nodes),
        edges=tuple(pairs),
        self_loops=loops,
        weights=tuple(best[p] for p in pairs),
    )


def hits(g: DirectedGraph, tol=HITS_TOL, max_iters=MAX_ITERS, weighted=False):
    """Authority/hub scores by power iteration on A^T A and A A^T with
    Euclidean normalization each step; edgeless graphs get zero vectors and
    a warning."""
    if not g.edges:
        warnings.warn("HITS on an edgeless graph: returning zero scores")
        return np.zeros(g.n), np.zeros(g.n)
    a = g.adjacency(weighted)
    auth = np.full(g.n, 1.0 / np.sqrt(g.n))
    hub = auth.copy()
    for _ in range(max_iters):
        auth_new = a.T @ hub
        auth_new /= np.linalg.norm(auth_new)
        hub_new = a @ auth_new
        hub_new /= np.linalg.norm(hub_new)
        if (np.max(np.abs(auth_new - auth)) <= tol
                and np.max(np.abs(hub_new - hub)) <= tol):
            return auth_new, hub_new
        auth, hub = auth_new, hub_new
    raise ConvergenceError(f"HITS did not converge in {max_iters} iterations")


def pagerank(g: DirectedGraph, damping=0.85, tol=PAGERANK_TOL,
             max_iters=MAX_ITERS, weighted=False) -> np.ndarray:
    """Damped random-surfer fixed point; dangling mass spreads uniformly."""
    if not 0 <= damping < 1:
        raise InputError(f"damping must be in [0, 1), got {damping}")
    a = g.adjacency(weighted)
    out = a.sum(axis=1)
    dangling = out == 0
    m = np.zeros_like(a)
    nz = ~dangling
    m[nz] = a[nz] / out[nz, None]
    v = np.full(g.n, 1.0 / g.n)
    teleport = (1.0 - damping) / g.n
    for _ in range(max_iters):
        v_new = damping * (m.T @ v + v[dangling].sum() / g.n) + teleport
        if np.sum(np.abs(v_new - v)) <= tol:
            return v_new
        v = v_new
    raise ConvergenceError(f"PageRank did not converge in {max_iters} iterations")


def _adjacency_lists(g):
    succ = [[] for _ in range(g.n)]
    for s, d in g.edges:
        succ[s].append(d)
    return succ


def betweenness(g: DirectedGraph, normalized=True) -> np.ndarray:
    """Directed shortest-path betweenness (Brandes accumulation), equal-length
    paths split evenly; endpoints excluded.  Normalization divides by
    (n-1)(n-2)."""
    n = g.n
    succ = _adjacency_lists(g)
    scores = np.zeros(n)
    for s in range(n):
        # BFS from s with path counting
        dist = np.full(n, -1)
        sigma = np.zeros(n)
        dist[s], sigma[s] = 0, 1.0
        order = [s]
        preds = [[] for _ in range(n)]
        head = 0
        while head < len(order):
            v = order[head]
            head += 1
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                scores[w] += delta[w]
    if normalized and n > 2:
        scores /= (n - 1) * (n - 2)
    return scores


def bridging_coefficient(g: DirectedGraph) -> np.ndarray:
    """Inverse-degree bridging ratio on the undirected simple projection:
    (1 / d(v)) / sum over neighbours w of 1 / d(w); isolated nodes get 0."""
    neighbours = [set() for _ in range(g.n)]
    for s, d in g.edges:
        neighbours[s].add(d)
        neighbours[d].add(s)
    deg = np.array([len(nb) for nb in neighbours], dtype=float)
    out = np.zeros(g.n)
    for v in range(g.n):
        if deg[v] == 0:
            continue
        denom = sum(1.0 / deg[w] for w in neighbours[v])
        out[v] = (1.0 / deg[v]) / denom
    return out


def _all_pairs_distances(g):
    succ = _adjacency_lists(g)
    dist = np.full((g.n, g.n), -1, dtype=np.int64)
    for s in range(g.n):
        dist[s, s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for w in succ[v]:
                if dist[s, w] < 0:
                    dist[s, w] = dist[s, v] + 1
                    queue.append(w)
    return dist


def global_stats(g: DirectedGraph) -> dict:
    """Diameter, average path length over ordered reachable pairs, and
    density |E| / (n (n-1)); unreachable ordered pairs are excluded from the
    path average and counted separately."""
    dist = _all_pairs_distances(g)
    off = ~np.eye(g.n, dtype=bool)
    reached = (dist > 0) & off
    unreachable = int(np.sum(off) - np.sum(reached))
    if reached.any():
        diameter = int(dist[reached].max())
        apl = float(dist[reached].mean())
    else:
        diameter, apl = None, None
    density = len(g.edges) / (g.n * (g.n - 1)) if g.n > 1 else 0.0
    return {
        "diameter": diameter,
        "average_path_length": apl,
        "density": density,
        "unreachable_pairs": unreachable,
        "nodes": g.n,
        "edges": len(g.edges),
    }


def node_stats(g: DirectedGraph) -> NodeStats:
    """All five per-node diagnostics in one pass."""
    auth, hub = hits(g)
    return NodeStats(
        labels=g.labels,
        authority=auth,
        hub=hub,
        pagerank=pagerank(g),
        betweenness=betweenness(g),
        bridging=bridging_coefficient(g),
    )


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def write_node_stats_csv(stats: NodeStats, path, metadata=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if metadata is not None:
            fh.write(f"# {metadata}\n")
        fh.write("node,authority,hub,pagerank,betweenness,bridging\n")
        for pos, label in enumerate(stats.labels):
            cells = ["%.17g" % col[pos] for col in
                     (stats.authority, stats.hub, stats.pagerank,
                      stats.betweenness, stats.bridging)]
            fh.write(",".join([label, *cells]) + "\n")


def global_stats_json(g: DirectedGraph, meta=None) -> str:
    doc = global_stats(g)
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True)


def to_dot(g: DirectedGraph) -> str:
    lines = ["digraph causal {"]
    for label in g.labels:
        lines.append(f'  "{label}";')
    for s, d in g.edges:
        lines.append(f'  "{g.labels[s]}" -> "{g.labels[d]}";')
    for v in g.self_loops:
        lines.append(f'  "{g.labels[v]}" -> "{g.labels[v]}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
