"""Weighted directed local optima network (LON) and its exports.

Arc weight ``w[i, j]`` is the probability that a uniformly random bit flip
applied to a genotype of basin ``i`` (weighted by its membership
probability), followed by climbing, ends in LONN ``j``::

    w[i, j] = 1/size_i * sum_s p_i(s) * 1/N * sum_{s' in V(s)} p_j(s')

Rows sum to one. Self-loops are stored; zero-weight arcs are not.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .basins import BasinDistribution
from .errors import ConsistencyError, ParameterError
from .landscape import NkInstance
from .neutrality import NeutralPartition


class GlobalOptimumTieError(ConsistencyError):
    pass


@dataclass(frozen=True, eq=False)
class LocalOptimaNetwork:
    fitness: np.ndarray  # integer numerators per node
    fitness_real: np.ndarray
    basin_size: np.ndarray
    is_global_optimum: np.ndarray
    weights: sp.csr_matrix  # (n_nodes, n_nodes), self-loops included
    n: int  # gene count of the underlying landscape
    approximate: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.fitness)

    @property
    def space_size(self) -> int:
        return 1 << self.n

    @property
    def optima(self) -> np.ndarray:
        return np.flatnonzero(self.is_global_optimum)

    @property
    def self_loops(self) -> np.ndarray:
        """``w_ii`` per node."""
        return self.weights.diagonal()

    def off_diagonal(self) -> sp.csr_matrix:
        w = self.weights.tolil()
        w.setdiag(0)
        w = w.tocsr()
        w.eliminate_zeros()
        return w

    def adjacency(self) -> sp.csr_matrix:
        """``a_ij`` (0/1) over arcs with ``i != j``."""
        a = self.off_diagonal()
        a.data[:] = 1.0
        return a

    def out_degree(self) -> np.ndarray:
        """``k_i``: number of out-arcs excluding the self-loop."""
        return np.diff(self.off_diagonal().indptr)

    def strength(self) -> np.ndarray:
        """``s_i``: total out-weight excluding the self-loop."""
        return np.asarray(self.off_diagonal().sum(axis=1)).ravel()

    @property
    def n_edges(self) -> int:
        return self.off_diagonal().nnz

    def relabel(self, perm) -> "LocalOptimaNetwork":
        """Network with node ``i`` renamed ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        w = self.weights[inv][:, inv].tocsr()
        return LocalOptimaNetwork(
            self.fitness[inv], self.fitness_real[inv], self.basin_size[inv],
            self.is_global_optimum[inv], w, self.n, self.approximate,
        )


def neighbor_average(probs: sp.csr_matrix, n: int) -> sp.csr_matrix:
    """Row ``s`` = mean of the rows of the ``n`` bit-flip neighbors of ``s``."""
    g = np.arange(probs.shape[0])
    acc = probs[g ^ 1]
    for b in range(1, n):
        acc = acc + probs[g ^ (1 << b)]
    return (acc / n).tocsr()


def build_lon(
    inst: NkInstance,
    part: NeutralPartition,
    dist: BasinDistribution,
    optimum_ties: str = "error",
) -> LocalOptimaNetwork:
    """Assemble the LON.

    ``optimum_ties`` decides what happens when several LONNs share the
    maximal fitness: ``"error"`` raises ``GlobalOptimumTieError``; ``"all"``
    flags every tied node as a global optimum.
    """
    if optimum_ties not in ("error", "all"):
        raise ParameterError(f"optimum_ties must be 'error' or 'all', got {optimum_ties!r}")
    probs = dist.probs
    if probs.shape != (inst.size, part.n_lonn):
        raise ConsistencyError(
            f"distribution shape {probs.shape} does not match ({inst.size}, {part.n_lonn})"
        )
    lonn_of = part.lonn_of
    members = np.flatnonzero(lonn_of >= 0)
    member_rows = probs[members]
    if (
        member_rows.nnz != len(members)
        or not np.array_equal(member_rows.indices, lonn_of[members])
        or not np.all(member_rows.data == 1.0)
    ):
        raise ConsistencyError("LONN members must have probability one for their own LONN")

    sizes = dist.basin_size
    flow = (probs.T @ neighbor_average(probs, inst.n)).tocsr()
    weights = sp.diags(1.0 / sizes) @ flow
    weights = weights.tocsr()
    weights.eliminate_zeros()
    weights.sort_indices()

    fit = part.lonn_fitness.copy()
    top = fit == fit.max()
    if top.sum() > 1 and optimum_ties == "error":
        raise GlobalOptimumTieError(f"{int(top.sum())} LONNs share the maximal fitness")
    return LocalOptimaNetwork(
        fitness=fit,
        fitness_real=inst.real_fitness(fit),
        basin_size=sizes,
        is_global_optimum=top,
        weights=weights,
        n=inst.n,
        approximate=not dist.exact,
    )


# -- exports -------------------------------------------------------------------

def edge_list_csv(lon: LocalOptimaNetwork) -> str:
    """``src,dst,weight`` rows, self-loops included, weights at 17 significant digits."""
    coo = lon.weights.tocoo()
    order = np.lexsort((coo.col, coo.row))
    out = io.StringIO()
    out.write("src,dst,weight\n")
    for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
        out.write(f"{r},{c},{w:.17g}\n")
    return out.getvalue()


def to_networkx(lon: LocalOptimaNetwork) -> nx.DiGraph:
    g = nx.DiGraph()
    for i in range(lon.n_nodes):
        g.add_node(
            i,
            fitness=float(lon.fitness_real[i]),
            basin_size=float(lon.basin_size[i]),
            is_global_optimum=bool(lon.is_global_optimum[i]),
        )
    coo = lon.weights.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
        g.add_edge(int(r), int(c), weight=float(w))
    return g


def graphml(lon: LocalOptimaNetwork) -> str:
    buf = io.BytesIO()
    nx.write_graphml(to_networkx(lon), buf, encoding="utf-8")
    return buf.getvalue().decode("utf-8")


def dot(lon: LocalOptimaNetwork, max_diameter: float = 2.0) -> str:
    """Graphviz DOT; node diameter proportional to basin size."""
    biggest = float(lon.basin_size.max())
    lines = ["digraph lon {", "  node [shape=circle, fixedsize=true];"]
    for i in range(lon.n_nodes):
        d = max_diameter * float(lon.basin_size[i]) / biggest
        extra = ", style=filled, fillcolor=gold" if lon.is_global_optimum[i] else ""
        lines.append(
            f'  {i} [label="{lon.fitness_real[i]:.4f}", width={d:.6f}, height={d:.6f}{extra}];'
        )
    coo = lon.weights.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
        lines.append(f'  {r} -> {c} [weight="{w:.17g}", penwidth={0.5 + 4.0 * w:.4f}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
