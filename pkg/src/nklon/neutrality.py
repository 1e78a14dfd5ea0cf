"""Neutral networks and local-optimum neutral networks (LONNs)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, ParameterError
from .landscape import NkInstance, neighbor_matrix

ENUMERATION_CAP = 20


@dataclass(frozen=True, eq=False)
class NeutralPartition:
    """Assignment of every genotype to a neutral network (NN).

    NN ids are numbered by their lowest member genotype. LONNs get a dense
    index ``0..n_lonn-1`` in the same order; ``lonn_index[nn]`` is -1 for
    NNs that are not LONNs.
    """

    nn_of: np.ndarray
    nn_fitness: np.ndarray
    nn_size: np.ndarray
    is_lonn: np.ndarray
    lonn_index: np.ndarray
    lonn_nn: np.ndarray  # NN id of each LONN

    @property
    def n_nn(self) -> int:
        return len(self.nn_size)

    @property
    def n_lonn(self) -> int:
        return len(self.lonn_nn)

    @property
    def lonn_of(self) -> np.ndarray:
        """Per genotype: LONN index, or -1 when outside every LONN."""
        return self.lonn_index[self.nn_of]

    @property
    def lonn_fitness(self) -> np.ndarray:
        return self.nn_fitness[self.lonn_nn]

    def members(self, nn: int) -> np.ndarray:
        return np.flatnonzero(self.nn_of == nn)


def check_enumerable(inst: NkInstance, cap: int = ENUMERATION_CAP) -> None:
    if inst.n > cap:
        raise CapacityError(f"n={inst.n} exceeds the enumeration cap of {cap}")


def neutral_partition(inst: NkInstance, cap: int = ENUMERATION_CAP) -> NeutralPartition:
    check_enumerable(inst, cap)
    f = inst.fitness_table
    size = inst.size
    g = np.arange(size, dtype=np.int64)

    # each undirected Hamming-1 edge once: (g, g | bit) for g with the bit clear
    src, dst = [], []
    for b in range(inst.n):
        low = g[(g >> b) & 1 == 0]
        high = low | (1 << b)
        eq = f[low] == f[high]
        src.append(low[eq])
        dst.append(high[eq])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(size, size))
    _, raw = connected_components(graph, directed=False)

    # canonical ids: order components by lowest member
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first, kind="stable")
    relabel = np.empty(len(order), dtype=np.int64)
    relabel[order] = np.arange(len(order))
    nn_of = relabel[raw]
    n_nn = len(order)

    nn_size = np.bincount(nn_of, minlength=n_nn)
    nn_fitness = np.empty(n_nn, dtype=np.int64)
    nn_fitness[nn_of] = f

    best_neighbor = f[neighbor_matrix(inst.n)].max(axis=1)
    dominated = np.zeros(n_nn, dtype=bool)
    dominated[nn_of[best_neighbor > f]] = True
    is_lonn = ~dominated

    lonn_nn = np.flatnonzero(is_lonn)
    lonn_index = np.full(n_nn, -1, dtype=np.int64)
    lonn_index[lonn_nn] = np.arange(len(lonn_nn))
    for arr in (nn_of, nn_size, nn_fitness, is_lonn, lonn_index, lonn_nn):
        arr.setflags(write=False)
    return NeutralPartition(nn_of, nn_fitness, nn_size, is_lonn, lonn_index, lonn_nn)


def neutral_degree(inst: NkInstance, g: int) -> int:
    if not 0 <= g < inst.size:
        raise ParameterError(f"genotype {g} out of range for n={inst.n}")
    f = inst.fitness_table
    return int(sum(f[g ^ (1 << b)] == f[g] for b in range(inst.n)))


def neutral_degrees(inst: NkInstance) -> np.ndarray:
    """Neutral degree of every genotype."""
    f = inst.fitness_table
    return (f[neighbor_matrix(inst.n)] == f[:, None]).sum(axis=1)


def nn_summary_rows(part: NeutralPartition, inst: NkInstance) -> list[tuple]:
    """Rows ``(nn_id, fitness, size, is_lonn)`` for CSV export."""
    real = inst.real_fitness(part.nn_fitness)
    return [
        (i, repr(float(real[i])), int(part.nn_size[i]), int(part.is_lonn[i]))
        for i in range(part.n_nn)
    ]
