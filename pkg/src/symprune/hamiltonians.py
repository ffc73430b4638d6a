"""Problem Hamiltonians (TFIM, MaxCut), random graphs, embeddings, trace tools.

Graph files are plain text: first line ``n m``, then ``m`` lines ``u v`` with
0-indexed endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import PauliString, PauliSum


@dataclass(frozen=True)
class ProblemGraph:
    """Simple undirected graph on vertices 0..num_vertices-1."""

    num_vertices: int
    edges: tuple  # tuple of sorted (u, v) pairs, deduplicated
    seed: object = None  # RNG seed used to generate it, if any

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError("self-loop")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("vertex index out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError("duplicate edge")
            seen.add(key)
        object.__setattr__(
            self, "edges", tuple(sorted((min(u, v), max(u, v)) for u, v in self.edges))
        )

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self):
        deg = [0] * self.num_vertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self, v: int):
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)


def erdos_renyi(n: int, p: float, seed) -> ProblemGraph:
    """G(n, p): each unordered pair drawn independently; reproducible per seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v))
    return ProblemGraph(n, tuple(edges), seed=seed)


def random_regular(n: int, d: int, seed) -> ProblemGraph:
    """d-regular graph via the pairing model with rejection of bad matchings."""
    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even for a d-regular graph")
    if d >= n:
        raise ValueError("degree must be below the vertex count")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(10000):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        edges = set()
        ok = True
        for u, v in pairs:
            u, v = int(min(u, v)), int(max(u, v))
            if u == v or (u, v) in edges:
                ok = False
                break
            edges.add((u, v))
        if ok:
            return ProblemGraph(n, tuple(sorted(edges)), seed=seed)
    raise RuntimeError("pairing model failed to produce a simple graph")


def write_graph(g: ProblemGraph, path) -> None:
    lines = [f"{g.num_vertices} {g.num_edges}"]
    lines += [f"{u} {v}" for u, v in g.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph(path) -> ProblemGraph:
    with open(path) as fh:
        tokens = fh.read().split()
    n, m = int(tokens[0]), int(tokens[1])
    flat = [int(t) for t in tokens[2:]]
    if len(flat) != 2 * m:
        raise ValueError("edge count does not match header")
    edges = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(m))
    return ProblemGraph(n, edges)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def build_tfim(n: int, h: float = 1.0) -> PauliSum:
    """Open-boundary transverse-field Ising chain.

    H = -sum_j Z_j Z_{j+1} - h * sum_j X_j   (n-1 coupling terms, n field terms)
    """
    if n < 2:
        raise ValueError("chain needs at least two sites")
    terms = []
    for j in range(n):
        terms.append((-h, PauliString(n, x_mask=1 << j)))
    for j in range(n - 1):
        terms.append((-1.0, PauliString(n, z_mask=(1 << j) | (1 << (j + 1)))))
    return PauliSum.from_terms(n, terms)


def build_maxcut(g: ProblemGraph) -> PauliSum:
    """Negated cut operator -1/2 sum_{(u,v) in E} (I - Z_u Z_v).

    The sign is chosen so that energy minimization finds the maximum cut: the
    ground energy equals -(max cut size) and the ground space encodes the
    optimal partitions.
    """
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    n = g.num_vertices
    terms = [(-0.5 * g.num_edges, PauliString.identity(n))]
    for u, v in g.edges:
        terms.append((0.5, PauliString(n, z_mask=(1 << u) | (1 << v))))
    return PauliSum.from_terms(n, terms)


def brute_force_max_cut(g: ProblemGraph) -> int:
    """Exhaustive max-cut oracle for small graphs (used by tests and the CLI)."""
    if g.num_vertices > 20:
        raise ValueError("brute force budget exceeded")
    best = 0
    for assignment in range(1 << (g.num_vertices - 1)):  # fix vertex n-1 on side 0
        cut = 0
        for u, v in g.edges:
            if ((assignment >> u) & 1) != ((assignment >> v) & 1):
                cut += 1
        best = max(best, cut)
    return best


@dataclass(frozen=True)
class EmbeddedHamiltonian:
    """An n-qubit Hamiltonian padded with identity wires to n+m qubits."""

    effective: PauliSum
    redundant_qubits: int
    full: PauliSum

    @property
    def num_system_qubits(self) -> int:
        return self.effective.num_qubits

    @property
    def num_total_qubits(self) -> int:
        return self.full.num_qubits


def embed_identity(h: PauliSum, m: int) -> EmbeddedHamiltonian:
    """H -> H (x) I^m; the new qubits are the top m wires."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    n_total = h.num_qubits + m
    terms = [(c, p.embed(n_total)) for c, p in h.terms]
    return EmbeddedHamiltonian(h, m, PauliSum.from_terms(n_total, terms))


def trace_h_squared(h: PauliSum) -> float:
    """Tr(H^2) = 2^n * sum_j alpha_j^2 by Pauli orthogonality."""
    return float((1 << h.num_qubits) * np.sum(h.coefficients() ** 2))


def project_hamiltonian(h: PauliSum, basis) -> np.ndarray:
    """Restriction of H to a subspace: the d_eff x d_eff matrix B^dag H B.

    ``basis`` is either a SubspaceBasis or a (2^n, d_eff) ndarray whose columns
    are orthonormal.
    """
    b = np.asarray(getattr(basis, "matrix", basis), dtype=complex)
    if b.ndim != 2 or b.shape[0] != (1 << h.num_qubits):
        raise ValueError("basis shape does not match the Hamiltonian register")
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
        raise ValueError("basis columns are not orthonormal")
    return b.conj().T @ h.to_dense() @ b


def interaction_graph(h: PauliSum) -> ProblemGraph:
    """Graph with one vertex per qubit and one edge per two-body coupling.

    Single-qubit terms contribute no edges; terms acting on three or more
    qubits have no graph representation and are rejected.
    """
    edges = set()
    for _, p in h.terms:
        sup = p.support
        if len(sup) == 2:
            edges.add(tuple(sorted(sup)))
        elif len(sup) > 2:
            raise ValueError("interaction graph is defined for at most 2-body terms")
    return ProblemGraph(h.num_qubits, tuple(sorted(edges)))
