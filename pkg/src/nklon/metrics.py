"""Network and basin observables of a local optima network."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .errors import ParameterError, ZeroVarianceError
from .lon import LocalOptimaNetwork
from .stats import TestResult, lognormal_check, pearson_test

HISTOGRAM_BINS = 40


def weighted_clustering(lon: LocalOptimaNetwork) -> tuple[np.ndarray, float, int]:
    """Per-node weighted clustering, its mean, and the count of nodes with k_i < 2.

    Sums run over ordered pairs (j, h), so a triangle with equal weights
    gives 1. Nodes with fewer than two out-arcs get 0 and stay in the mean.
    """
    w = lon.off_diagonal()
    a = lon.adjacency()
    at = a.T.tocsr()
    k = lon.out_degree()
    s = lon.strength()
    # sum_{j,h} w_ij a_jh a_hi  and  sum_{j,h} a_ij a_jh w_ih a_hi
    closing = np.asarray((w @ a).multiply(at).sum(axis=1)).ravel()
    opening = np.asarray((a @ a).multiply(w).multiply(at).sum(axis=1)).ravel()
    c = np.zeros(lon.n_nodes)
    ok = k >= 2
    c[ok] = 0.5 * (closing[ok] + opening[ok]) / (s[ok] * (k[ok] - 1))
    return c, float(c.mean()), int((~ok).sum())


def disparity(lon: LocalOptimaNetwork) -> tuple[np.ndarray, float | None, int]:
    """Per-node Y2 (NaN where s_i = 0), mean over defined nodes, excluded count."""
    w = lon.off_diagonal()
    s = lon.strength()
    sq = np.asarray(w.multiply(w).sum(axis=1)).ravel()
    y2 = np.full(lon.n_nodes, np.nan)
    ok = s > 0
    y2[ok] = sq[ok] / s[ok] ** 2
    mean = float(y2[ok].mean()) if ok.any() else None
    return y2, mean, int((~ok).sum())


@dataclass(frozen=True)
class PathStats:
    avg_path_length: float
    n_pairs: int
    unreachable_pairs: int
    avg_path_to_optimum: float
    n_sources: int
    unreachable_sources: int


def distance_graph(lon: LocalOptimaNetwork):
    """Off-diagonal arcs with length 1/w."""
    d = lon.off_diagonal()
    d.data = 1.0 / d.data
    return d


def shortest_paths(lon: LocalOptimaNetwork) -> PathStats:
    """Average shortest path over reachable ordered pairs and into the optimum.

    Distances into the optimum are directed (source -> optimum); with tied
    optima the nearest one counts. Empty averages are 0.
    """
    n = lon.n_nodes
    d = distance_graph(lon)
    dist = dijkstra(d, directed=True)
    off = ~np.eye(n, dtype=bool)
    finite = np.isfinite(dist) & off
    n_pairs = int(finite.sum())
    avg = float(dist[finite].mean()) if n_pairs else 0.0

    opt = lon.optima
    to_opt = dijkstra(d.T.tocsr(), directed=True, indices=opt, min_only=True)
    sources = np.ones(n, dtype=bool)
    sources[opt] = False
    reach = sources & np.isfinite(to_opt)
    n_src = int(reach.sum())
    avg_opt = float(to_opt[reach].mean()) if n_src else 0.0
    return PathStats(
        avg_path_length=avg,
        n_pairs=n_pairs,
        unreachable_pairs=int((off & ~np.isfinite(dist)).sum()),
        avg_path_to_optimum=avg_opt,
        n_sources=n_src,
        unreachable_sources=int((sources & ~np.isfinite(to_opt)).sum()),
    )


def weight_histogram(lon: LocalOptimaNetwork, bins: int = HISTOGRAM_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Counts of off-diagonal weights in log-spaced bins over [1/(N 2^N), 1].

    Weights below the lower edge are counted in the first bin.
    """
    lo = 1.0 / (lon.n * lon.space_size)
    edges = np.logspace(np.log10(lo), 0.0, bins + 1)
    values = np.clip(lon.off_diagonal().data, lo, 1.0)
    counts, _ = np.histogram(values, bins=edges)
    return counts, edges


@dataclass(frozen=True)
class BasinStats:
    mean: float
    sd: float
    histogram: tuple[np.ndarray, np.ndarray]
    global_optimum_share: float


def basin_statistics(lon: LocalOptimaNetwork, bins: int = 20) -> BasinStats:
    """Mean and population standard deviation of basin sizes, size histogram,
    and the share of the search space held by the global optimum basin(s)."""
    sizes = lon.basin_size
    hist = np.histogram(sizes, bins=bins)
    share = float(sizes[lon.optima].sum()) / lon.space_size
    return BasinStats(float(sizes.mean()), float(sizes.std()), hist, share)


def fitness_size_correlation(lon: LocalOptimaNetwork) -> TestResult | None:
    """Pearson test of (fitness, ln basin size); None when undefined."""
    if lon.n_nodes < 2:
        return None
    try:
        return pearson_test(lon.fitness_real, np.log(lon.basin_size))
    except ZeroVarianceError:
        return None


@dataclass(frozen=True)
class MetricsReport:
    model: str
    n: int
    k: int
    param: float | int | None
    seed: int
    n_nodes: int
    n_edges: int
    n_global_optima: int
    global_max_fitness: float
    mean_wii: float
    mean_wij_offdiag: float | None
    mean_basin_size: float
    sd_basin_size: float
    lognormal_pass: bool | None
    fitness_size_correlation: float | None
    fitness_size_p_value: float | None
    global_optimum_basin_share: float
    cw_mean: float
    cw_low_degree_nodes: int
    disparity_mean: float | None
    disparity_excluded: int
    avg_path_length: float
    path_pairs: int
    unreachable_pairs: int
    avg_path_to_optimum: float
    optimum_sources: int
    unreachable_sources: int
    approximate: bool

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        return [format_value(v) for v in asdict(self).values()]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def compute_metrics(lon: LocalOptimaNetwork, spec) -> MetricsReport:
    """All scalar observables of ``lon``; ``spec`` supplies the instance identifiers."""
    if lon.n_nodes < 1:
        raise ParameterError("empty network")
    wii = lon.self_loops
    offdiag = lon.off_diagonal().data
    basins = basin_statistics(lon)
    try:
        logn = lognormal_check(lon.basin_size) if lon.n_nodes >= 3 else None
    except ZeroVarianceError:
        logn = None
    corr = fitness_size_correlation(lon)
    _, cw, low = weighted_clustering(lon)
    _, y2, excluded = disparity(lon)
    paths = shortest_paths(lon)
    return MetricsReport(
        model=spec.model,
        n=spec.n,
        k=spec.k,
        param=spec.param,
        seed=int(spec.seed),
        n_nodes=lon.n_nodes,
        n_edges=len(offdiag),
        n_global_optima=int(lon.is_global_optimum.sum()),
        global_max_fitness=float(lon.fitness_real.max()),
        mean_wii=float(wii.mean()),
        mean_wij_offdiag=float(offdiag.mean()) if len(offdiag) else None,
        mean_basin_size=basins.mean,
        sd_basin_size=basins.sd,
        lognormal_pass=logn,
        fitness_size_correlation=None if corr is None else corr.statistic,
        fitness_size_p_value=None if corr is None else corr.p_value,
        global_optimum_basin_share=basins.global_optimum_share,
        cw_mean=cw,
        cw_low_degree_nodes=low,
        disparity_mean=y2,
        disparity_excluded=excluded,
        avg_path_length=paths.avg_path_length,
        path_pairs=paths.n_pairs,
        unreachable_pairs=paths.unreachable_pairs,
        avg_path_to_optimum=paths.avg_path_to_optimum,
        optimum_sources=paths.n_sources,
        unreachable_sources=paths.unreachable_sources,
        approximate=lon.approximate,
    )


def per_node_rows(lon: LocalOptimaNetwork) -> list[list[str]]:
    """Rows ``node,fitness,basin_size,cw,y2`` for the per-node export."""
    c, _, _ = weighted_clustering(lon)
    y2, _, _ = disparity(lon)
    return [
        [str(i), format_value(lon.fitness_real[i]), format_value(lon.basin_size[i]),
         format_value(c[i]), "" if np.isnan(y2[i]) else format_value(y2[i])]
        for i in range(lon.n_nodes)
    ]
