"""Independent oracles shared across the test suite.

Everything here is built from first principles — dense kron algebra,
exhaustive enumeration, rank-based linear algebra — so agreement with the
package is evidence rather than tautology.
"""

import itertools

import numpy as np

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(label: str) -> np.ndarray:
    """Kron product with character j acting on qubit j (bit j of the index)."""
    m = np.eye(1, dtype=complex)
    for ch in label:
        m = np.kron(PAULI_MATS[ch], m)
    return m


def dense_rotation(label: str, theta: float) -> np.ndarray:
    """exp(-i*theta*P) for a letter-string P, via cos/sin (P squares to I)."""
    p = dense_pauli(label)
    return np.cos(theta) * np.eye(p.shape[0]) - 1j * np.sin(theta) * p


def dense_cnot(n: int, control: int, target: int) -> np.ndarray:
    d = 1 << n
    m = np.zeros((d, d), dtype=complex)
    for b in range(d):
        out = b ^ (1 << target) if (b >> control) & 1 else b
        m[out, b] = 1.0
    return m


def circuit_unitary(design, params) -> np.ndarray:
    """Dense unitary of an ansatz, replayed gate by gate with kron matrices."""
    params = np.asarray(params, dtype=float)
    u = np.eye(1 << design.num_qubits, dtype=complex)
    for gate in design.all_gates():
        if gate.kind == "rot":
            g = dense_rotation(gate.generator.label(), params[gate.param_slot])
        elif gate.kind == "fixed":
            g = dense_rotation(gate.generator.label(), gate.angle)
        else:
            g = dense_cnot(design.num_qubits, gate.control, gate.target)
        u = g @ u
    return u


def exhaustive_max_cut(num_vertices: int, edges) -> int:
    best = 0
    for bits in itertools.product((0, 1), repeat=num_vertices):
        cut = sum(1 for u, v in edges if bits[u] != bits[v])
        best = max(best, cut)
    return best


def exhaustive_automorphisms(num_vertices: int, edges) -> set:
    """All edge-set-preserving vertex permutations, by brute force."""
    edge_set = {tuple(sorted(e)) for e in edges}
    found = set()
    for perm in itertools.permutations(range(num_vertices)):
        mapped = {tuple(sorted((perm[u], perm[v]))) for u, v in edge_set}
        if mapped == edge_set:
            found.add(perm)
    return found


def is_connected(num_vertices: int, edges) -> bool:
    if num_vertices <= 1:
        return True
    adj = {v: set() for v in range(num_vertices)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == num_vertices


def all_connected_graphs(num_vertices: int):
    """Every labeled connected graph on the given vertex count, as edge tuples."""
    pairs = list(itertools.combinations(range(num_vertices), 2))
    out = []
    for bits in range(1, 1 << len(pairs)):
        edges = tuple(pairs[i] for i in range(len(pairs)) if (bits >> i) & 1)
        if is_connected(num_vertices, edges):
            out.append(edges)
    return out


def random_connected_graph(rng, num_vertices: int, p: float):
    pairs = list(itertools.combinations(range(num_vertices), 2))
    while True:
        edges = tuple(e for e in pairs if rng.random() < p)
        if edges and is_connected(num_vertices, edges):
            return edges


def lie_closure_dimension(generators, tol: float = 1e-9) -> int:
    """Rank-based Lie-closure oracle over dense Hermitian generators.

    Flattens skew-Hermitian matrices to real vectors and measures linear
    independence with SVD rank — a different mechanism from any incremental
    Gram-Schmidt scheme.
    """

    def flat(m):
        return np.concatenate([m.real.ravel(), m.imag.ravel()])

    basis = []
    flats = []

    def push(m):
        nrm = np.linalg.norm(m)
        if nrm < tol:
            return False
        m = m / nrm
        cand = flats + [flat(m)]
        if np.linalg.matrix_rank(np.array(cand), tol=tol) > len(basis):
            basis.append(m)
            flats.append(flat(m))
            return True
        return False

    for g in generators:
        push(-1j * np.asarray(g, dtype=complex))
    grew = True
    while grew:
        grew = False
        for a, b in itertools.combinations(list(basis), 2):
            if push(a @ b - b @ a):
                grew = True
    return len(basis)
