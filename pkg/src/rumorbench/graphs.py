"""Synthetic network topologies.

Five graph families are supported: complete graphs, hypercubes, 2-d wrapped
grids with 8-neighborhoods (torus), Erdos-Renyi random graphs G(n, p), and
random d-regular graphs.  Graphs are stored as per-node ordered adjacency in
CSR layout (``adj_flat`` / ``adj_ptr``); the generator-defined neighbor order
doubles as the canonic contact-list order, so generators are careful about it:

* complete, G(n, p), regular: neighbors ascending by id
* hypercube: neighbors ordered by flipped-bit index (LSB first)
* torus: neighbors ordered counterclockwise through the eight directions

Node ids are 0-based.  Torus nodes use id = a * side + b for coordinates
(a, b); hypercube node ids are the bit-vector values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RandomSource

__all__ = [
    "Graph",
    "GraphSpec",
    "GraphGenerationError",
    "TORUS_DIRECTIONS",
    "gen_complete",
    "gen_hypercube",
    "gen_torus",
    "gen_gnp",
    "gen_random_regular",
    "is_connected",
    "sample_connected",
    "parse_graph_spec",
]

# Counterclockwise direction cycle for the 8-neighbor torus, starting at (1, 0).
TORUS_DIRECTIONS: tuple[tuple[int, int], ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)

DEFAULT_MAX_ATTEMPTS = 1000


class GraphGenerationError(RuntimeError):
    """Raised when no connected sample was found within the attempt budget."""

    def __init__(self, spec: "GraphSpec", attempts: int):
        self.spec = spec
        self.attempts = attempts
        super().__init__(
            f"no connected sample of {spec.canonical_text()} in {attempts} attempts"
        )

    def __reduce__(self):
        return (GraphGenerationError, (self.spec, self.attempts))


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in CSR adjacency layout.

    ``adj_flat[adj_ptr[u]:adj_ptr[u+1]]`` are the neighbors of u in canonic
    order.  Instances are immutable and safe to share across readers.
    """

    n: int
    adj_flat: np.ndarray
    adj_ptr: np.ndarray
    kind: str = "custom"
    side: int = 0  # torus only
    dim: int = 0   # hypercube only

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adj_ptr)

    @property
    def num_edges(self) -> int:
        return int(self.adj_ptr[-1]) // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj_flat[self.adj_ptr[u]:self.adj_ptr[u + 1]]

    @classmethod
    def from_adjacency(cls, lists: list[list[int]], kind: str = "custom") -> "Graph":
        n = len(lists)
        flat = np.array([v for row in lists for v in row], dtype=np.int32)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum([len(row) for row in lists], out=ptr[1:])
        g = cls(n=n, adj_flat=flat, adj_ptr=ptr, kind=kind)
        _check_graph(g)
        return g


def _check_graph(g: Graph) -> None:
    """Verify no self-loops, no duplicate neighbors, and symmetry."""
    n = g.n
    if g.adj_ptr.shape != (n + 1,) or g.adj_ptr[0] != 0:
        raise ValueError("malformed adjacency pointers")
    if np.any(np.diff(g.adj_ptr) < 0):
        raise ValueError("adjacency pointers must be nondecreasing")
    if g.adj_flat.size:
        if g.adj_flat.min() < 0 or g.adj_flat.max() >= n:
            raise ValueError("neighbor id out of range")
    src = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    dst = g.adj_flat.astype(np.int64)
    if np.any(src == dst):
        raise ValueError("self-loop in adjacency")
    fwd = np.sort(src * n + dst)
    if fwd.size and np.any(np.diff(fwd) == 0):
        raise ValueError("duplicate neighbor in adjacency")
    if not np.array_equal(fwd, np.sort(dst * n + src)):
        raise ValueError("adjacency is not symmetric")


def _csr_from_edges(n: int, u: np.ndarray, v: np.ndarray, kind: str) -> Graph:
    """Build a CSR graph from undirected edge endpoint arrays, neighbors ascending."""
    src = np.concatenate([u, v]).astype(np.int64)
    dst = np.concatenate([v, u]).astype(np.int64)
    order = np.lexsort((dst, src))
    flat = dst[order].astype(np.int32)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    g = Graph(n=n, adj_flat=flat, adj_ptr=ptr, kind=kind)
    _check_graph(g)
    return g


def gen_complete(n: int) -> Graph:
    """Complete graph: every node lists all others in ascending id order."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    ids = np.arange(n, dtype=np.int32)
    mat = np.broadcast_to(ids, (n, n))
    mask = ~np.eye(n, dtype=bool)
    flat = mat[mask]
    ptr = np.arange(n + 1, dtype=np.int64) * (n - 1)
    g = Graph(n=n, adj_flat=flat, adj_ptr=ptr, kind="complete")
    _check_graph(g)
    return g


def gen_hypercube(d: int) -> Graph:
    """d-dimensional hypercube; node u is adjacent to u XOR 2**(i-1), i = 1..d."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    n = 1 << d
    ids = np.arange(n, dtype=np.int32)
    bits = (np.int32(1) << np.arange(d, dtype=np.int32))
    flat = (ids[:, None] ^ bits[None, :]).ravel()
    ptr = np.arange(n + 1, dtype=np.int64) * d
    g = Graph(n=n, adj_flat=flat, adj_ptr=ptr, kind="hypercube", dim=d)
    _check_graph(g)
    return g


def gen_torus(side: int) -> Graph:
    """side x side wrapped grid where each node has the eight kings-move neighbors.

    Adjacency follows the fixed counterclockwise direction cycle starting at
    (1, 0), which is also the canonic list order.
    """
    if side < 3:
        raise ValueError(f"need side >= 3 so all eight directions are distinct, got {side}")
    n = side * side
    ids = np.arange(n, dtype=np.int64)
    a, b = ids // side, ids % side
    cols = []
    for da, db in TORUS_DIRECTIONS:
        cols.append(((a + da) % side) * side + (b + db) % side)
    flat = np.stack(cols, axis=1).ravel().astype(np.int32)
    ptr = np.arange(n + 1, dtype=np.int64) * 8
    g = Graph(n=n, adj_flat=flat, adj_ptr=ptr, kind="torus", side=side)
    _check_graph(g)
    return g


def _decode_pair(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the upper-triangle pair sequence to (i, j), i < j."""
    # offsets[i] = number of pairs with first endpoint < i
    i_range = np.arange(n, dtype=np.int64)
    offsets = i_range * (2 * n - i_range - 1) // 2
    i = np.searchsorted(offsets, k, side="right") - 1
    j = k - offsets[i] + i + 1
    return i, j


def gen_gnp(n: int, p: float, rng: RandomSource) -> Graph:
    """Erdos-Renyi G(n, p) via geometric skips over the pair sequence.

    Walking the n(n-1)/2 vertex pairs with Geometric(p) jumps selects exactly
    the same edge distribution as n(n-1)/2 independent coin flips but costs
    O(edges) instead of O(n^2).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"need p in [0, 1], got {p}")
    total = n * (n - 1) // 2
    if p == 0.0 or total == 0:
        return _csr_from_edges(n, np.empty(0, np.int64), np.empty(0, np.int64), "gnp")
    gen = rng.gen
    picks: list[np.ndarray] = []
    pos = -1  # last selected linear index
    batch = max(64, int(1.2 * total * p) + 16)
    while pos < total:
        jumps = gen.geometric(p, size=batch).astype(np.int64)
        sel = pos + np.cumsum(jumps)
        picks.append(sel)
        pos = int(sel[-1])
        batch = max(64, batch // 4)
    k = np.concatenate(picks)
    k = k[k < total]
    u, v = _decode_pair(k, n)
    return _csr_from_edges(n, u, v, "gnp")


class _UniformBuffer:
    """Block-buffered U[0,1) draws; cuts per-call overhead in tight loops."""

    def __init__(self, gen: np.random.Generator, block: int = 4096):
        self._gen = gen
        self._block = block
        self._buf = gen.random(block)
        self._i = 0

    def next_index(self, bound: int) -> int:
        if self._i >= self._buf.shape[0]:
            self._buf = self._gen.random(self._block)
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return int(u * bound)


def _pairing_attempt(n: int, d: int, uni: _UniformBuffer) -> list[tuple[int, int]] | None:
    """One pass of the pairing construction; None when stuck (caller restarts).

    Points are the n*d half-edge endpoints.  Random point pairs are matched,
    rejecting same-node pairs and repeated edges.  When no legal pair remains
    among the unmatched points the whole construction must restart.
    """
    pts = list(range(n * d))
    size = n * d
    edge_set: set[int] = set()
    edges: list[tuple[int, int]] = []
    rejects = 0
    while size > 0:
        i1 = uni.next_index(size)
        i2 = uni.next_index(size - 1)
        if i2 >= i1:
            i2 += 1
        u, v = pts[i1] // d, pts[i2] // d
        lo, hi = (u, v) if u < v else (v, u)
        code = lo * n + hi
        if u == v or code in edge_set:
            rejects += 1
            if rejects >= 128 and not _legal_pair_exists(pts, size, n, d, edge_set):
                return None
            continue
        rejects = 0
        edge_set.add(code)
        edges.append((lo, hi))
        # swap-remove both points, higher index first
        if i1 < i2:
            i1, i2 = i2, i1
        size -= 1
        pts[i1] = pts[size]
        size -= 1
        pts[i2] = pts[size]
    return edges


def _legal_pair_exists(pts: list[int], size: int, n: int, d: int, edge_set: set[int]) -> bool:
    nodes = sorted({pts[i] // d for i in range(size)})
    for a_idx, a in enumerate(nodes):
        for b in nodes[a_idx + 1:]:
            if a * n + b not in edge_set:
                return True
    return False


def gen_random_regular(n: int, d: int, rng: RandomSource) -> Graph:
    """Simple d-regular graph sampled by the pairing procedure with restarts."""
    if not 1 <= d < n:
        raise ValueError(f"need 1 <= d < n, got d={d}, n={n}")
    if (n * d) % 2 != 0:
        raise ValueError(f"need n*d even, got n={n}, d={d}")
    uni = _UniformBuffer(rng.gen)
    while True:
        edges = _pairing_attempt(n, d, uni)
        if edges is not None:
            arr = np.array(edges, dtype=np.int64)
            return _csr_from_edges(n, arr[:, 0], arr[:, 1], "regular")


def is_connected(g: Graph) -> bool:
    """True iff a traversal from node 0 reaches all nodes."""
    if g.n <= 1:
        return True
    visited = np.zeros(g.n, dtype=bool)
    visited[0] = True
    frontier = np.array([0], dtype=np.int64)
    reached = 1
    flat, ptr = g.adj_flat, g.adj_ptr
    while frontier.size:
        chunks = [flat[ptr[u]:ptr[u + 1]] for u in frontier]
        nxt = np.unique(np.concatenate(chunks))
        nxt = nxt[~visited[nxt]]
        visited[nxt] = True
        reached += nxt.size
        frontier = nxt
    return reached == g.n


def sample_connected(
    spec: "GraphSpec",
    rng: RandomSource,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> Graph:
    """Generate from spec, discarding disconnected samples, up to max_attempts."""
    if max_attempts < 1:
        raise ValueError(f"need max_attempts >= 1, got {max_attempts}")
    for _ in range(max_attempts):
        g = spec.generate(rng)
        if is_connected(g):
            return g
    raise GraphGenerationError(spec, max_attempts)


@dataclass(frozen=True)
class GraphSpec:
    """One of the five topology families plus its parameters.

    Use the classmethod constructors; they validate the family invariants.
    """

    kind: str
    n: int = 0
    d: int = 0
    side: int = 0
    p: float = 0.0
    p_mode: str = "literal"  # literal | lnn | 2lnn

    @classmethod
    def complete(cls, n: int) -> "GraphSpec":
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        return cls(kind="complete", n=n)

    @classmethod
    def hypercube(cls, d: int) -> "GraphSpec":
        if d < 1:
            raise ValueError(f"need d >= 1, got {d}")
        return cls(kind="hypercube", n=1 << d, d=d)

    @classmethod
    def torus(cls, side: int) -> "GraphSpec":
        if side < 3:
            raise ValueError(f"need side >= 3, got {side}")
        return cls(kind="torus", n=side * side, side=side)

    @classmethod
    def gnp(cls, n: int, p: float | str) -> "GraphSpec":
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        if isinstance(p, str):
            if p not in ("lnn", "2lnn"):
                raise ValueError(f"p mode must be 'lnn' or '2lnn', got {p!r}")
            mult = 1.0 if p == "lnn" else 2.0
            return cls(kind="gnp", n=n, p=mult * math.log(n) / n if n > 1 else 0.0,
                       p_mode=p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"need p in [0, 1], got {p}")
        return cls(kind="gnp", n=n, p=float(p))

    @classmethod
    def regular(cls, n: int, d: int) -> "GraphSpec":
        if not 1 <= d < n:
            raise ValueError(f"need 1 <= d < n, got d={d}, n={n}")
        if (n * d) % 2 != 0:
            raise ValueError(f"need n*d even, got n={n}, d={d}")
        return cls(kind="regular", n=n, d=d)

    @property
    def is_random(self) -> bool:
        return self.kind in ("gnp", "regular")

    def generate(self, rng: RandomSource) -> Graph:
        if self.kind == "complete":
            return gen_complete(self.n)
        if self.kind == "hypercube":
            return gen_hypercube(self.d)
        if self.kind == "torus":
            return gen_torus(self.side)
        if self.kind == "gnp":
            return gen_gnp(self.n, self.p, rng)
        if self.kind == "regular":
            return gen_random_regular(self.n, self.d, rng)
        raise ValueError(f"unknown graph kind {self.kind!r}")

    def canonical_text(self) -> str:
        if self.kind == "complete":
            return f"complete:{self.n}"
        if self.kind == "hypercube":
            return f"hypercube:{self.d}"
        if self.kind == "torus":
            return f"torus:{self.side}"
        if self.kind == "gnp":
            if self.p_mode != "literal":
                return f"gnp:{self.n}:{self.p_mode}"
            return f"gnp:{self.n}:{self.p:.12g}"
        if self.kind == "regular":
            return f"regular:{self.n}:{self.d}"
        raise ValueError(f"unknown graph kind {self.kind!r}")


def parse_graph_spec(text: str) -> GraphSpec:
    """Parse the CLI spec syntax, e.g. complete:4096, gnp:4096:lnn, regular:4096:12."""
    parts = text.strip().split(":")
    kind = parts[0]
    try:
        if kind == "complete" and len(parts) == 2:
            return GraphSpec.complete(int(parts[1]))
        if kind == "hypercube" and len(parts) == 2:
            return GraphSpec.hypercube(int(parts[1]))
        if kind == "torus" and len(parts) == 2:
            return GraphSpec.torus(int(parts[1]))
        if kind == "gnp" and len(parts) == 3:
            p: float | str = parts[2] if parts[2] in ("lnn", "2lnn") else float(parts[2])
            return GraphSpec.gnp(int(parts[1]), p)
        if kind == "regular" and len(parts) == 3:
            return GraphSpec.regular(int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad graph spec {text!r}: {exc}") from exc
    raise ValueError(f"bad graph spec {text!r}")
