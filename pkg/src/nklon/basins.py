"""Probabilistic basins of attraction under stochastic hill climbing.

The climber picks uniformly among the maximal-fitness neighbors of the
current genotype and moves there when it is at least as fit, until it
sits inside a LONN.  Outside LONNs the move is always accepted (a genotype
with only strictly worse neighbors forms a singleton NN, which is a LONN),
so the climber is a Markov chain absorbed by LONN members.

``exact_basin_distributions`` computes the absorption probabilities level
by level in descending fitness. ``monte_carlo_basins`` estimates them by
simulation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConsistencyError, ConvergenceError, DivergenceError, ParameterError
from .landscape import NkInstance, neighbor_matrix
from .neutrality import NeutralPartition

MAX_STEPS = 10**7
DENSE_LIMIT = 512
RESIDUAL_TOL = 1e-12
REFINE_ITERATIONS = 20


@dataclass(frozen=True, eq=False)
class BasinDistribution:
    """Per-genotype probabilities of ending in each LONN.

    ``probs`` is a ``(2**n, n_lonn)`` CSR matrix; row ``s`` holds ``p_i(s)``.
    """

    probs: sp.csr_matrix
    exact: bool = True

    @property
    def basin_size(self) -> np.ndarray:
        return np.asarray(self.probs.sum(axis=0)).ravel()

    @property
    def n_lonn(self) -> int:
        return self.probs.shape[1]

    def row(self, s: int) -> dict[int, float]:
        lo, hi = self.probs.indptr[s], self.probs.indptr[s + 1]
        return dict(zip(self.probs.indices[lo:hi].tolist(), self.probs.data[lo:hi].tolist()))

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.probs.sum(axis=1)).ravel()


def climb_moves(inst: NkInstance) -> tuple[np.ndarray, np.ndarray]:
    """Maximal-fitness neighbors of every genotype.

    Returns ``(moves, counts)``: ``moves[g, :counts[g]]`` lists the argmax
    neighbors of ``g`` in ascending flipped-bit order, padded with -1.
    """
    f = inst.fitness_table
    nb = neighbor_matrix(inst.n)
    nf = f[nb]
    is_max = nf == nf.max(axis=1, keepdims=True)
    counts = is_max.sum(axis=1)
    # stable sort keeps ascending bit order among the argmax entries
    order = np.argsort(~is_max, axis=1, kind="stable")
    moves = np.take_along_axis(nb, order, axis=1)
    moves[np.arange(inst.n)[None, :] >= counts[:, None]] = -1
    return moves, counts


def _rows_to_csr(rows: list[dict[int, float]], n_cols: int) -> sp.csr_matrix:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1], dtype=np.float64)
    for s, r in enumerate(rows):
        keys = sorted(r)
        indices[indptr[s]:indptr[s + 1]] = keys
        data[indptr[s]:indptr[s + 1]] = [r[c] for c in keys]
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), n_cols))


def _mean_rows(rows: list[dict[int, float]]) -> dict[int, float]:
    if len(rows) == 1:
        return dict(rows[0])
    acc: dict[int, float] = {}
    for r in rows:
        for key, value in r.items():
            acc[key] = acc.get(key, 0.0) + value
    w = len(rows)
    return {key: value / w for key, value in acc.items()}


def _inner_components(inner: list[int], neutral: dict[int, list[int]]) -> list[list[int]]:
    inner_set = set(inner)
    seen: set[int] = set()
    comps = []
    for start in inner:
        if start in seen:
            continue
        seen.add(start)
        comp, queue = [], deque([start])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in neutral[u]:
                if v in inner_set and v not in seen:
                    seen.add(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps


def _solve_plateau(comp: list[int], neutral: dict[int, list[int]], rows: list) -> None:
    """Fill ``rows`` for one connected set of plateau-interior genotypes.

    Interior genotypes move uniformly to their neutral neighbors; those
    outside ``comp`` are plateau exits whose rows are already known.
    """
    m = len(comp)
    pos = {g: i for i, g in enumerate(comp)}
    cols: dict[int, int] = {}
    q_rows, q_cols, q_vals = [], [], []
    rhs_entries: list[tuple[int, int, float]] = []
    for i, u in enumerate(comp):
        nbrs = neutral[u]
        w = 1.0 / len(nbrs)
        for v in nbrs:
            j = pos.get(v)
            if j is not None:
                q_rows.append(i)
                q_cols.append(j)
                q_vals.append(w)
            else:
                for lonn, p in rows[v].items():
                    c = cols.setdefault(lonn, len(cols))
                    rhs_entries.append((i, c, w * p))
    b = np.zeros((m, len(cols)))
    for i, c, val in rhs_entries:
        b[i, c] += val
    a = sp.identity(m, format="csc") - sp.csc_matrix((q_vals, (q_rows, q_cols)), shape=(m, m))

    if m <= DENSE_LIMIT:
        dense = a.toarray()
        x = np.linalg.solve(dense, b)
        matvec = dense.__matmul__
        refine = lambda r: np.linalg.solve(dense, r)  # noqa: E731
    else:
        lu = splu(a)
        x = lu.solve(b)
        matvec = a.__matmul__
        refine = lu.solve
    residual = np.abs(matvec(x) - b).max(initial=0.0)
    it = 0
    while residual >= RESIDUAL_TOL and it < REFINE_ITERATIONS:
        x += refine(b - matvec(x))
        residual = np.abs(matvec(x) - b).max(initial=0.0)
        it += 1
    if residual >= RESIDUAL_TOL:
        raise ConvergenceError(f"plateau of {m} genotypes: residual {residual:.3e} after {it} refinements")

    keys = list(cols)
    for i, u in enumerate(comp):
        rows[u] = {keys[c]: float(x[i, c]) for c in range(len(keys)) if x[i, c] != 0.0}


def exact_basin_distributions(inst: NkInstance, part: NeutralPartition) -> BasinDistribution:
    f = inst.fitness_table
    if len(part.nn_of) != inst.size:
        raise ConsistencyError("partition does not match the instance size")
    moves, counts = climb_moves(inst)
    best = f[moves[:, 0]]
    rows: list[dict[int, float] | None] = [None] * inst.size

    members_of = np.split(np.argsort(part.nn_of, kind="stable"), np.cumsum(part.nn_size)[:-1])
    nn_order = np.argsort(-part.nn_fitness, kind="stable")
    for nn in nn_order:
        members = members_of[nn]
        if part.is_lonn[nn]:
            one = {int(part.lonn_index[nn]): 1.0}
            for s in members:
                rows[s] = one
            continue
        inner = []
        for s in members.tolist():
            if best[s] > f[s]:
                rows[s] = _mean_rows([rows[t] for t in moves[s, :counts[s]].tolist()])
            elif best[s] == f[s]:
                inner.append(s)
            else:
                raise ConsistencyError(f"genotype {s} is a strict local optimum outside every LONN")
        if not inner:
            continue
        if len(inner) == len(members):
            # termination lemma: every non-LONN network has an exit
            raise ConsistencyError(f"neutral network {nn} has no fitter neighbor but is not a LONN")
        neutral = {s: moves[s, :counts[s]].tolist() for s in inner}
        for comp in _inner_components(inner, neutral):
            _solve_plateau(comp, neutral, rows)
    return BasinDistribution(_rows_to_csr(rows, part.n_lonn), exact=True)


def hill_climb(
    inst: NkInstance,
    part: NeutralPartition,
    start: int,
    rng: np.random.Generator,
    max_steps: int = MAX_STEPS,
) -> int:
    """Run one stochastic hill climb from ``start``; return the LONN index reached."""
    if not 0 <= start < inst.size:
        raise ParameterError(f"genotype {start} out of range for n={inst.n}")
    f = inst.fitness_table
    lonn_of = part.lonn_of
    s = start
    steps = 0
    while lonn_of[s] < 0:
        nbrs = [s ^ (1 << b) for b in range(inst.n)]
        top = max(f[t] for t in nbrs)
        cands = [t for t in nbrs if f[t] == top]
        nxt = cands[int(rng.integers(len(cands)))]
        if f[s] <= f[nxt]:
            s = nxt
        steps += 1
        if steps > max_steps:
            raise DivergenceError(f"hill climb from {start} exceeded {max_steps} steps")
    return int(lonn_of[s])


def start_rng(seed: int, start: int) -> np.random.Generator:
    """Independent random substream for the climbs launched from ``start``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(start,))))


def _climb_batch(start, samples, moves, counts, lonn_of, rng, max_steps) -> np.ndarray:
    """Endpoints (LONN indices) of ``samples`` independent climbs from ``start``."""
    state = np.full(samples, start, dtype=np.int64)
    active = np.arange(samples)
    steps = 0
    while len(active):
        cur = state[active]
        pick = (rng.random(len(active)) * counts[cur]).astype(np.int64)
        state[active] = moves[cur, pick]
        active = active[lonn_of[state[active]] < 0]
        steps += 1
        if steps > max_steps:
            raise DivergenceError(f"hill climb from {start} exceeded {max_steps} steps")
    return lonn_of[state]


def monte_carlo_basins(
    inst: NkInstance,
    part: NeutralPartition,
    samples_per_start: int,
    seed: int,
    max_steps: int = MAX_STEPS,
) -> BasinDistribution:
    """Empirical basin distributions from ``samples_per_start`` climbs per genotype.

    Climbs from each start use their own substream (``start_rng``), so the
    estimate for one genotype does not depend on the others.
    """
    if samples_per_start < 1:
        raise ParameterError("samples_per_start must be >= 1")
    moves, counts = climb_moves(inst)
    lonn_of = part.lonn_of
    n_lonn = part.n_lonn
    rows: list[dict[int, float]] = []
    for s in range(inst.size):
        if lonn_of[s] >= 0:
            rows.append({int(lonn_of[s]): 1.0})
            continue
        ends = _climb_batch(s, samples_per_start, moves, counts, lonn_of, start_rng(seed, s), max_steps)
        hits = np.bincount(ends, minlength=n_lonn)
        nz = np.flatnonzero(hits)
        rows.append({int(i): hits[i] / samples_per_start for i in nz})
    return BasinDistribution(_rows_to_csr(rows, n_lonn), exact=False)


def basin_size_rows(dist: BasinDistribution, part: NeutralPartition, inst: NkInstance) -> list[tuple]:
    """Rows ``(lonn_id, fitness, size)`` for CSV export."""
    real = inst.real_fitness(part.lonn_fitness)
    sizes = dist.basin_size
    return [(i, repr(float(real[i])), repr(float(sizes[i]))) for i in range(part.n_lonn)]


def distribution_rows(dist: BasinDistribution) -> list[tuple]:
    """Full sparse dump, rows ``(genotype, lonn_id, probability)``."""
    coo = dist.probs.tocoo()
    return [(int(r), int(c), repr(float(v))) for r, c, v in zip(coo.row, coo.col, coo.data)]
