"""Independent brute-force oracles that pin expected values for the suite.

Nothing here may call into spnkit's own algorithms: distances come from
exhaustive simple-path search, modularity from explicit Python loops and
full set-partition enumeration, tail probabilities from math.erfc and
mpmath's incomplete beta.
"""

import math

import numpy as np
from mpmath import betainc, mp

mp.dps = 30


def brute_force_distances(lengths: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths by recursive search over simple paths.

    ``lengths`` holds edge traversal lengths with np.inf for absent
    edges.  A branch is cut only once its running length already matches
    the best known arrival at the node being entered, which discards no
    potentially shorter path (lengths are nonnegative).
    """
    n = lengths.shape[0]
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    neighborhoods = [np.flatnonzero(np.isfinite(lengths[v])) for v in range(n)]

    for source in range(n):
        on_path = [False] * n
        on_path[source] = True

        def walk(vertex: int, acc: float) -> None:
            for nxt in neighborhoods[vertex]:
                if on_path[nxt]:
                    continue
                length = acc + lengths[vertex, nxt]
                if length >= dist[source, nxt]:
                    continue
                dist[source, nxt] = length
                on_path[nxt] = True
                walk(int(nxt), length)
                on_path[nxt] = False

        walk(source, 0.0)
    return dist


def hop_lengths(adjacency: np.ndarray) -> np.ndarray:
    lengths = np.where(np.asarray(adjacency) > 0, 1.0, np.inf)
    np.fill_diagonal(lengths, np.inf)
    return lengths


def reciprocal_lengths(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    lengths = np.full(w.shape, np.inf)
    pos = w > 0
    lengths[pos] = 1.0 / w[pos]
    np.fill_diagonal(lengths, np.inf)
    return lengths


def efficiency_from_oracle(dist: np.ndarray) -> float:
    n = dist.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and math.isfinite(dist[i, j]) and dist[i, j] > 0:
                total += 1.0 / dist[i, j]
    return total / (n * (n - 1))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def f_tail_p(f_stat: float, d1: int, d2: int) -> float:
    """P(F > f) via the regularized incomplete beta at 30 digits."""
    x = d2 / (d2 + d1 * f_stat)
    return float(betainc(d2 / 2, d1 / 2, 0, x, regularized=True))


def bh_stepup(p_values, alpha: float):
    """Literal step-up rule: largest rank i with p_(i) <= i*alpha/m."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: (p_values[i], i))
    k = 0
    for rank, idx in enumerate(order, start=1):
        if p_values[idx] <= rank * alpha / m:
            k = rank
    rejected = [False] * m
    for idx in order[:k]:
        rejected[idx] = True
    return rejected, k


def rm_anova_f(table) -> float:
    """Repeated-measures F by explicit per-cell residual deviations.

    Uses column-major accumulation and computes the residual stratum
    directly (not by subtraction), unlike the library implementation.
    """
    t = np.asarray(table, dtype=float)
    n, j = t.shape
    total, count = 0.0, 0
    for col in range(j):
        for row in range(n):
            total += t[row, col]
            count += 1
    grand = total / count
    col_means = [sum(t[row, col] for row in range(n)) / n for col in range(j)]
    row_means = [sum(t[row, col] for col in range(j)) / j for row in range(n)]
    ss_cond = sum(n * (cm - grand) ** 2 for cm in col_means)
    ss_resid = 0.0
    for col in range(j):
        for row in range(n):
            dev = t[row, col] - col_means[col] - row_means[row] + grand
            ss_resid += dev * dev
    return (ss_cond / (j - 1)) / (ss_resid / ((n - 1) * (j - 1)))


def set_partitions(items: list):
    """Every partition of ``items`` into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield [[first]] + part


def newman_q(adjacency, assignment) -> float:
    """Modularity of a partition by plain loops over module members."""
    a = np.asarray(adjacency)
    n = a.shape[0]
    m = int(a.sum()) // 2
    degrees = [int(a[v].sum()) for v in range(n)]
    q = 0.0
    for module in set(assignment):
        members = [v for v in range(n) if assignment[v] == module]
        internal = sum(int(a[u, v]) for u in members for v in members) / 2.0
        degree_sum = sum(degrees[v] for v in members)
        q += internal / m - (degree_sum / (2.0 * m)) ** 2
    return q


def exhaustive_max_q(adjacency) -> float:
    n = np.asarray(adjacency).shape[0]
    best = -math.inf
    for blocks in set_partitions(list(range(n))):
        assignment = [0] * n
        for module, block in enumerate(blocks):
            for v in block:
                assignment[v] = module
        best = max(best, newman_q(adjacency, assignment))
    return best
