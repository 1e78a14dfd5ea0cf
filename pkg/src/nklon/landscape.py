"""NK, NKp and NKq landscape generation with integer-scaled fitness.

Fitness components are stored as integers so that fitness is an exact
integer sum and neutrality (strict fitness equality) can be tested with
``==``.  The real-valued fitness of a genotype is ``numerator / (n * scale)``.

Genotypes are plain ints; bit ``i`` holds the allele of gene ``i``.

Table lookup packs the relevant alleles into an index with the gene's own
allele in bit 0 and the epistatic partners, in ``links[i]`` order, in bits
1..K.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from .errors import DocumentError, ParameterError

MODELS = ("NK", "NKp", "NKq")
NEIGHBORHOODS = ("adjacent", "random")
MAX_N = 20
REAL_SCALE = 2**30
GENERATOR_NAME = "numpy.PCG64(SeedSequence(seed, spawn_key=(gene,)))"


@dataclass(frozen=True)
class ModelSpec:
    """Parameters that fully determine an instance.

    ``param`` is ``p`` for NKp, ``q`` for NKq and ``None`` for NK.
    """

    model: str
    n: int
    k: int
    param: float | int | None = None
    neighborhood: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= MAX_N:
            raise ParameterError(f"n must be an integer in [1, {MAX_N}], got {self.n!r}")
        if not isinstance(self.k, (int, np.integer)) or not 0 <= self.k < self.n:
            raise ParameterError(f"k must satisfy 0 <= k < n, got k={self.k!r} n={self.n}")
        if self.neighborhood not in NEIGHBORHOODS:
            raise ParameterError(f"unknown neighborhood {self.neighborhood!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.model == "NK":
            if self.param is not None:
                raise ParameterError("NK takes no parameter")
        elif self.model == "NKp":
            p = self.param
            if p is None or isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
                raise ParameterError(f"NKp requires 0 <= p <= 1, got {p!r}")
            object.__setattr__(self, "param", float(p))
        else:
            q = self.param
            if isinstance(q, float) and q.is_integer():
                q = int(q)
            if not isinstance(q, (int, np.integer)) or isinstance(q, bool) or q < 2:
                raise ParameterError(f"NKq requires an integer q >= 2, got {q!r}")
            object.__setattr__(self, "param", int(q))

    @property
    def scale(self) -> int:
        return int(self.param) if self.model == "NKq" else REAL_SCALE

    @property
    def label(self) -> str:
        """Short cell label, e.g. ``NKq(q=2)``."""
        if self.model == "NKp":
            return f"NKp(p={self.param:g})"
        if self.model == "NKq":
            return f"NKq(q={self.param})"
        return "NK"


@dataclass(frozen=True, eq=False)
class NkInstance:
    spec: ModelSpec
    links: np.ndarray  # (n, k) partner indices
    tables: np.ndarray  # (n, 2**(k+1)) integer component values

    def __post_init__(self):
        self.links.setflags(write=False)
        self.tables.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, NkInstance):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.links, other.links)
            and np.array_equal(self.tables, other.tables)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def scale(self) -> int:
        return self.spec.scale

    @property
    def size(self) -> int:
        return 1 << self.spec.n

    @cached_property
    def fitness_table(self) -> np.ndarray:
        """Fitness numerators of all ``2**n`` genotypes (read-only int64 array)."""
        g = np.arange(self.size, dtype=np.int64)
        total = np.zeros(self.size, dtype=np.int64)
        for i in range(self.n):
            idx = (g >> i) & 1
            for j, partner in enumerate(self.links[i]):
                idx |= ((g >> int(partner)) & 1) << (j + 1)
            total += self.tables[i][idx]
        total.setflags(write=False)
        return total

    def real_fitness(self, numerator) -> float | np.ndarray:
        """Convert fitness numerator(s) to the reported value in [0, 1)."""
        return np.asarray(numerator, dtype=np.float64) / (self.n * self.scale)


def adjacent_links(n: int, k: int) -> np.ndarray:
    """Periodic adjacent partners: ceil(k/2) to the left, floor(k/2) to the right.

    Partners are ordered by offset, ``-ceil(k/2), ..., -1, 1, ..., floor(k/2)``.
    """
    left = -(-k // 2)
    offsets = [o for o in range(-left, k - left + 1) if o != 0]
    return np.array([[(i + o) % n for o in offsets] for i in range(n)], dtype=np.int64).reshape(n, k)


def _gene_rng(seed: int, gene: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(gene,))))


def generate_instance(spec: ModelSpec) -> NkInstance:
    """Materialize the instance determined by ``spec``.

    Each gene draws from its own substream. Per gene the draw order is:
    partner indices (random neighborhood only), then for NKq ``2**(k+1)``
    integers in ``[0, q)``, otherwise ``2**(k+1)`` uniforms deciding which
    entries are zeroed followed by ``2**(k+1)`` integers in ``[0, 2**30)``.
    The zeroing draws happen whatever ``p`` is, so NKp with ``p=0`` is
    identical to NK with the same seed.
    """
    n, k = spec.n, spec.k
    width = 1 << (k + 1)
    links = adjacent_links(n, k) if spec.neighborhood == "adjacent" else np.empty((n, k), dtype=np.int64)
    tables = np.empty((n, width), dtype=np.int64)
    for i in range(n):
        rng = _gene_rng(spec.seed, i)
        if spec.neighborhood == "random":
            others = np.array([j for j in range(n) if j != i], dtype=np.int64)
            links[i] = rng.choice(others, size=k, replace=False)
        if spec.model == "NKq":
            tables[i] = rng.integers(0, spec.param, size=width)
        else:
            p = spec.param if spec.model == "NKp" else 0.0
            zeroed = rng.random(width) < p
            values = rng.integers(0, REAL_SCALE, size=width)
            values[zeroed] = 0
            tables[i] = values
    return NkInstance(spec, links, tables)


def fitness(inst: NkInstance, g: int) -> int:
    """Fitness numerator of genotype ``g`` by direct table lookup."""
    if not 0 <= g < inst.size:
        raise ParameterError(f"genotype {g} out of range for n={inst.n}")
    total = 0
    for i in range(inst.n):
        idx = (g >> i) & 1
        for j, partner in enumerate(inst.links[i]):
            idx |= ((g >> int(partner)) & 1) << (j + 1)
        total += int(inst.tables[i][idx])
    return total


def neighbors(g: int, n: int) -> list[int]:
    """The ``n`` single bit-flip neighbors of ``g``, by ascending flipped bit."""
    return [g ^ (1 << b) for b in range(n)]


def neighbor_matrix(n: int) -> np.ndarray:
    """``(2**n, n)`` array whose row ``g`` lists ``neighbors(g, n)``."""
    g = np.arange(1 << n, dtype=np.int64)[:, None]
    return g ^ (np.int64(1) << np.arange(n, dtype=np.int64))[None, :]


# -- documents ---------------------------------------------------------------

_FIELDS = ("model", "n", "k", "param", "neighborhood", "seed", "scale", "generator", "links", "tables")


def serialize_instance(inst: NkInstance) -> str:
    """Canonical JSON text: fixed field order, one table per line."""
    s = inst.spec
    head = {
        "model": s.model,
        "n": s.n,
        "k": s.k,
        "param": s.param,
        "neighborhood": s.neighborhood,
        "seed": int(s.seed),
        "scale": inst.scale,
        "generator": GENERATOR_NAME,
    }
    lines = [f"  {json.dumps(key)}: {json.dumps(value)}," for key, value in head.items()]
    lines.append('  "links": [')
    lines.append(",\n".join(f"    {json.dumps([int(x) for x in row])}" for row in inst.links))
    lines.append("  ],")
    lines.append('  "tables": [')
    lines.append(",\n".join(f"    {json.dumps([int(x) for x in row])}" for row in inst.tables))
    lines.append("  ]")
    return "{\n" + "\n".join(lines) + "\n}\n"


def _int_field(doc: dict, key: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(key, f"expected integer, got {value!r}")
    return value


def _int_rows(value: Any, path: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise DocumentError(path, f"expected a list of {rows} rows")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise DocumentError(f"{path}[{i}]", f"expected a list of {cols} integers")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, int):
                raise DocumentError(f"{path}[{i}][{j}]", f"expected integer, got {x!r}")
    return np.array(value, dtype=np.int64).reshape(rows, cols)


def deserialize_instance(text: str | bytes | dict) -> NkInstance:
    """Parse and validate an instance document.

    Raises ``DocumentError`` naming the first offending field.
    """
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DocumentError("$", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DocumentError("$", "expected an object")
    for key in _FIELDS:
        if key not in doc and key != "generator":
            raise DocumentError(key, "missing field")

    n = _int_field(doc, "n")
    k = _int_field(doc, "k")
    seed = _int_field(doc, "seed")
    try:
        spec = ModelSpec(doc["model"], n, k, doc["param"], doc["neighborhood"], seed)
    except ParameterError as exc:
        raise DocumentError("model/n/k/param/neighborhood/seed", str(exc)) from None
    if _int_field(doc, "scale") != spec.scale:
        raise DocumentError("scale", f"expected {spec.scale} for {spec.model}, got {doc['scale']}")

    links = _int_rows(doc["links"], "links", n, k)
    for i, row in enumerate(links):
        if len(set(row.tolist())) != k:
            raise DocumentError(f"links[{i}]", "partners must be distinct")
        for j, x in enumerate(row):
            if x == i:
                raise DocumentError(f"links[{i}][{j}]", "gene cannot be its own partner")
            if not 0 <= x < n:
                raise DocumentError(f"links[{i}][{j}]", f"partner {x} out of range")
    if spec.neighborhood == "adjacent" and not np.array_equal(links, adjacent_links(n, k)):
        raise DocumentError("links", "does not match the adjacent neighborhood rule")

    tables = _int_rows(doc["tables"], "tables", n, 1 << (k + 1))
    bad = np.argwhere((tables < 0) | (tables >= spec.scale))
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise DocumentError(f"tables[{i}][{j}]", f"value {int(tables[i, j])} outside [0, {spec.scale})")
    return NkInstance(spec, links, tables)


def global_max(inst: NkInstance) -> int:
    return int(inst.fitness_table.max())


def neutral_pair_fraction(inst: NkInstance) -> float:
    """Fraction of Hamming-1 pairs with equal fitness."""
    f = inst.fitness_table
    nb = neighbor_matrix(inst.n)
    return float(np.mean(f[nb] == f[:, None]))


def parse_model(text: str) -> tuple[str, float | int | None]:
    """Parse labels like ``NK``, ``NKp:0.8`` or ``NKq:2`` (also ``NKp(p=0.8)``)."""
    t = text.strip().replace("(", ":").replace(")", "").replace("p=", "").replace("q=", "")
    name, _, rest = t.partition(":")
    match = {m.lower(): m for m in MODELS}.get(name.lower())
    if match is None:
        raise ParameterError(f"unknown model {text!r}")
    if match == "NK":
        if rest:
            raise ParameterError("NK takes no parameter")
        return match, None
    if not rest:
        raise ParameterError(f"{match} needs a parameter, e.g. {match}:{'0.8' if match == 'NKp' else '2'}")
    return match, (float(rest) if match == "NKp" else int(rest))
