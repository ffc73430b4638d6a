"""Invariant subspaces, Lie closures, graph automorphisms, and kernel theory.

The quantities here connect an ansatz's symmetry structure to its training
behaviour:

* ``invariant_subspace`` builds the smallest subspace containing a seed state
  and closed under a set of Hermitian generators; its dimension is the
  effective dimension d_eff.
* ``dla_closure`` computes the dynamical Lie algebra spanned by the
  generators under nested commutators.
* ``qntk`` is the squared norm of the energy-residual gradient; its
  restriction to the invariant subspace (``eqntk_projected``) must agree with
  the full-space value for symmetry-respecting circuits — that identity is the
  module's central cross-check.
* ``theory_qbar`` / ``theory_qbar_s`` / ``theory_fluctuation`` are closed-form
  predictions for the kernel's average and spread over uniform parameter
  draws; ``monte_carlo_kernel`` estimates the same quantities empirically.
* ``graph_automorphisms`` enumerates the full automorphism group of a problem
  graph together with its vertex and edge orbits, which drive parameter
  sharing in the pruning pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzDesign
from .hamiltonians import ProblemGraph, interaction_graph
from .quantum_core import PauliString, PauliSum, StateVector, exact_ground
from .training import LossSpec, energy_gradient


# ---------------------------------------------------------------------------
# invariant subspace (effective dimension)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a generator-invariant subspace."""

    matrix: np.ndarray  # (2^n, d_eff), orthonormal columns
    generators: tuple = ()  # the generators the subspace is closed under

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        gram = m.conj().T @ m
        if np.max(np.abs(gram - np.eye(m.shape[1]))) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        for g in self.generators:
            for col in range(m.shape[1]):
                w = _apply_generator(g, m[:, col])
                resid = w - m @ (m.conj().T @ w)
                if np.linalg.norm(resid) > 1e-8:
                    raise ValueError("basis is not closed under its generators")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    @property
    def parent_dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def columns(self) -> list:
        n = int(np.log2(self.parent_dimension))
        return [StateVector(n, self.matrix[:, k].copy()) for k in range(self.dimension)]

    def project(self, amplitudes: np.ndarray) -> np.ndarray:
        """Coordinates of a full-space vector in this basis."""
        return self.matrix.conj().T @ np.asarray(amplitudes, dtype=complex)

    def residual(self, amplitudes: np.ndarray) -> float:
        """Norm of the component outside the subspace."""
        v = np.asarray(amplitudes, dtype=complex)
        return float(np.linalg.norm(v - self.matrix @ (self.matrix.conj().T @ v)))


def _apply_generator(g, vec: np.ndarray) -> np.ndarray:
    """Apply a PauliString or PauliSum to raw amplitudes."""
    if isinstance(g, PauliSum):
        out = np.zeros_like(vec)
        basis = np.arange(vec.shape[0])
        for coeff, p in g.terms:
            idx, fac = p.action_tables()
            out += coeff * fac[basis ^ p.x_mask] * vec[basis ^ p.x_mask]
        return out
    idx, fac = g.action_tables()
    basis = np.arange(vec.shape[0])
    j = basis ^ g.x_mask
    return fac[j] * vec[j]


def _orthogonalize(w: np.ndarray, cols: list) -> np.ndarray:
    """Modified Gram-Schmidt against cols, with one re-orthogonalization pass."""
    for _ in range(2):
        for u in cols:
            w = w - u * np.vdot(u, w)
    return w


def invariant_subspace(generators, seed_state: StateVector, tol: float = 1e-10) -> SubspaceBasis:
    """Smallest subspace containing the seed and invariant under the generators.

    Generators may be PauliStrings or PauliSums (the latter arise from
    parameter sharing, where one slot moves a sum of strings at once).
    Breadth-first closure: apply every generator to every basis vector,
    keep components orthogonal to the current basis with norm above tol.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    generators = tuple(generators)
    for g in generators:
        if isinstance(g, PauliString) and not g.is_hermitian:
            raise ValueError("generators must be Hermitian")
    seed = np.asarray(seed_state.amplitudes, dtype=complex)
    nrm = np.linalg.norm(seed)
    if nrm == 0:
        raise ValueError("seed state is zero")
    cols = [seed / nrm]
    cursor = 0
    while cursor < len(cols):
        v = cols[cursor]
        cursor += 1
        for g in generators:
            w = _orthogonalize(_apply_generator(g, v), cols)
            wn = np.linalg.norm(w)
            if wn > tol:
                cols.append(w / wn)
    return SubspaceBasis(np.column_stack(cols), generators=generators)


def slot_generators(a: AnsatzDesign) -> tuple:
    """One Hermitian generator per distinct parameter slot content.

    A slot moving several tied rotation occurrences generates motion along the
    *sum* of their Pauli strings, so the slot generator is that sum; slots
    with identical content (e.g. the same orbit in different layers) are
    deduplicated.  For an unshared ansatz this reduces to the set of distinct
    rotation generators.
    """
    per_slot = {}
    for layer in a.layers:
        for g in layer:
            if g.kind == "rot":
                per_slot.setdefault(g.param_slot, []).append(g.generator)
    out = {}
    for slot in sorted(per_slot):
        members = per_slot[slot]
        key = frozenset((p.x_mask, p.z_mask) for p in members)
        if key in out:
            continue
        if len(members) == 1:
            out[key] = members[0]
        else:
            out[key] = PauliSum.from_terms(
                a.num_qubits, [(1.0, p) for p in members]
            )
    return tuple(out.values())


def circuit_seed_state(a: AnsatzDesign) -> StateVector:
    """|0...0> advanced through the ansatz preamble (the pre-layer constants)."""
    from .ansatz import prepare_state

    trivial = AnsatzDesign(a.num_qubits, ((),), 0, preamble=a.preamble)
    return prepare_state(trivial, np.zeros(0))


# ---------------------------------------------------------------------------
# dynamical Lie algebra closure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DlaResult:
    dimension: int
    basis: tuple  # orthonormal (Hilbert-Schmidt) skew-Hermitian matrices
    capped: bool


def dla_closure(generators, tol: float = 1e-10, cap: int = None) -> DlaResult:
    """Lie closure of {iG_k} under nested commutators.

    Works in the real vector space of skew-Hermitian matrices with the
    Hilbert-Schmidt inner product Re Tr(A^dag B).  Returns an orthonormal
    basis; `capped` reports that the dimension budget (default 4^n - 1) was
    exhausted before reaching a fixpoint.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    gens = [g.to_dense() if not isinstance(g, np.ndarray) else g for g in generators]
    if not gens:
        raise ValueError("no generators")
    dim = gens[0].shape[0]
    if cap is None:
        cap = dim * dim - 1

    basis = []
    overflow = False

    def _reduce(m: np.ndarray) -> np.ndarray:
        for _ in range(2):
            for b in basis:
                m = m - b * np.real(np.vdot(b, m))
        return m

    def _push(m: np.ndarray) -> bool:
        # capped means a genuinely new direction was refused, not merely that
        # the closure's dimension happens to equal the budget
        nonlocal overflow
        m = _reduce(m)
        nrm = np.linalg.norm(m)
        if nrm > tol:
            if len(basis) >= cap:
                overflow = True
                return False
            basis.append(m / nrm)
            return True
        return False

    for g in gens:
        _push(-1j * g)
    cursor = 0
    while cursor < len(basis) and not overflow:
        a = basis[cursor]
        cursor += 1
        for b in basis[: cursor]:
            _push(a @ b - b @ a)
            if overflow:
                break
    return DlaResult(dimension=len(basis), basis=tuple(basis), capped=overflow)


# ---------------------------------------------------------------------------
# kernel values
# ---------------------------------------------------------------------------

def qntk(a: AnsatzDesign, params, spec: LossSpec) -> float:
    """Q = |grad eps|^2, the squared norm of the residual gradient.

    The residual's offset constant drops out of the derivative, so Q equals
    the squared norm of the raw energy gradient.
    """
    _, de = energy_gradient(a, params, spec.hamiltonian, method="adjoint")
    return float(de @ de)


def _hermitian_expm(h: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i*theta*h) for Hermitian h via eigendecomposition."""
    evals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * theta * evals)) @ vecs.conj().T


def eqntk_projected(a: AnsatzDesign, params, h: PauliSum, basis: SubspaceBasis) -> float:
    """Kernel evaluated entirely inside the invariant subspace.

    Every gate is restricted to the subspace (with a leak check: a residual
    above 1e-8 means the ansatz does not preserve it), the circuit is replayed
    on d_eff-dimensional coordinates, and the same reverse-sweep derivative
    formula as the full-space engine is applied.  For symmetry-respecting
    ansätze this equals `qntk` up to float error.
    """
    params = np.asarray(params, dtype=float)
    b = basis.matrix
    if b.shape[0] != (1 << a.num_qubits):
        raise ValueError("basis register mismatch")

    seed = circuit_seed_state(a).amplitudes
    if basis.residual(seed) > 1e-8:
        raise ValueError("seed state leaks out of the subspace")
    psi = basis.project(seed)

    # restrict every distinct gate unitary/generator once
    proj_cache = {}

    def _project_generator(p: PauliString) -> np.ndarray:
        key = ("g", p.x_mask, p.z_mask)
        if key not in proj_cache:
            gb = np.column_stack([_apply_generator(p, b[:, k]) for k in range(b.shape[1])])
            star = b.conj().T @ gb
            if np.linalg.norm(gb - b @ star) > 1e-8:
                raise ValueError("ansatz generator does not preserve the subspace")
            proj_cache[key] = star
        return proj_cache[key]

    def _project_cnot(control: int, target: int) -> np.ndarray:
        key = ("c", control, target)
        if key not in proj_cache:
            rows = np.arange(b.shape[0])
            perm = rows ^ (((rows >> control) & 1) << target)
            cb = b[perm, :]
            star = b.conj().T @ cb
            if np.linalg.norm(cb - b @ star) > 1e-8:
                raise ValueError("cnot does not preserve the subspace")
            proj_cache[key] = star
        return proj_cache[key]

    h_star = b.conj().T @ h.to_dense() @ b

    gates = [g for layer in a.layers for g in layer]
    # forward pass on subspace coordinates
    for g in gates:
        if g.kind == "rot":
            psi = _hermitian_expm(_project_generator(g.generator), params[g.param_slot]) @ psi
        elif g.kind == "fixed":
            psi = _hermitian_expm(_project_generator(g.generator), g.angle) @ psi
        else:
            psi = _project_cnot(g.control, g.target) @ psi

    mu = h_star @ psi
    slot_derivs = np.zeros(a.num_free_params)
    for g in reversed(gates):
        if g.kind == "rot":
            star = _project_generator(g.generator)
            slot_derivs[g.param_slot] += 2.0 * float(np.imag(np.vdot(mu, star @ psi)))
            undo = _hermitian_expm(star, -params[g.param_slot])
            psi = undo @ psi
            mu = undo @ mu
        elif g.kind == "fixed":
            undo = _hermitian_expm(_project_generator(g.generator), -g.angle)
            psi = undo @ psi
            mu = undo @ mu
        else:
            star = _project_cnot(g.control, g.target)
            psi = star.conj().T @ psi
            mu = star.conj().T @ mu
    return float(slot_derivs @ slot_derivs)


# ---------------------------------------------------------------------------
# closed-form kernel statistics
# ---------------------------------------------------------------------------

def theory_qbar_s(num_params: int, h_star: np.ndarray, d_eff: int) -> float:
    """Predicted average kernel LK * Tr((H*)^2) / d_eff^2.

    Substituting the Lie-algebra dimension d_g for d_eff gives the
    algebra-based variant of the same estimate.
    """
    if d_eff <= 0:
        raise ValueError("subspace dimension must be positive")
    h_star = np.asarray(h_star, dtype=complex)
    tr2 = float(np.real(np.vdot(h_star, h_star)))
    return num_params * tr2 / (d_eff * d_eff)


def theory_qbar(num_params: int, h: PauliSum) -> float:
    """Predicted average kernel for the unrestricted case: LK * Tr(H^2) / 4^n."""
    return theory_qbar_s(num_params, h.to_dense(), 1 << h.num_qubits)


def theory_fluctuation(num_params: int, h_star: np.ndarray, d_eff: int) -> float:
    """Predicted kernel variance (LK / d_eff^4) * (8 Tr^2((H*)^2) + 12 Tr((H*)^4))."""
    if d_eff <= 0:
        raise ValueError("subspace dimension must be positive")
    h_star = np.asarray(h_star, dtype=complex)
    m2 = h_star @ h_star
    tr2 = float(np.real(np.trace(m2)))
    tr4 = float(np.real(np.vdot(m2, m2)))
    return num_params / float(d_eff) ** 4 * (8.0 * tr2 * tr2 + 12.0 * tr4)


def monte_carlo_kernel(a: AnsatzDesign, spec: LossSpec, trials: int, seed) -> tuple:
    """Sample qntk at `trials` uniform parameter draws.

    Each trial uses an independent generator keyed by (seed, trial index), so
    results are reproducible and insensitive to trial order.  Returns
    (mean, sample standard deviation, samples).
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    samples = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng((seed, t))
        theta = rng.uniform(-np.pi, np.pi, a.num_free_params)
        samples[t] = qntk(a, theta, spec)
    return float(np.mean(samples)), float(np.std(samples, ddof=1)), samples


# ---------------------------------------------------------------------------
# graph automorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AutomorphismGroup:
    elements: tuple  # each a tuple perm with perm[v] = image of v
    vertex_orbits: tuple  # sorted tuple of sorted vertex tuples
    edge_orbits: tuple  # sorted tuple of sorted edge tuples

    @property
    def order(self) -> int:
        return len(self.elements)


def graph_automorphisms(g: ProblemGraph) -> AutomorphismGroup:
    """All adjacency-preserving vertex permutations, with orbits.

    Backtracking search; candidate images are pruned by the invariant
    (degree, sorted multiset of neighbor degrees), which both the vertex and
    its image must share.
    """
    n = g.num_vertices
    if n > 16:
        raise ValueError("automorphism search budget is 16 vertices")
    adj = [set() for _ in range(n)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    deg = [len(a) for a in adj]
    sig = [(deg[v], tuple(sorted(deg[u] for u in adj[v]))) for v in range(n)]
    candidates = [[u for u in range(n) if sig[u] == sig[v]] for v in range(n)]
    # assign most-constrained vertices first
    order = sorted(range(n), key=lambda v: len(candidates[v]))

    perm = [-1] * n
    used = [False] * n
    found = []

    def _extend(depth: int):
        if depth == n:
            found.append(tuple(perm))
            return
        v = order[depth]
        for u in candidates[v]:
            if used[u]:
                continue
            ok = True
            for w in order[:depth]:
                if (w in adj[v]) != (perm[w] in adj[u]):
                    ok = False
                    break
            if ok:
                perm[v] = u
                used[u] = True
                _extend(depth + 1)
                used[u] = False
                perm[v] = -1

    _extend(0)

    vertex_orbits = _orbits_of(range(n), found, lambda p, v: p[v])
    edge_orbits = _orbits_of(
        g.edges, found, lambda p, e: tuple(sorted((p[e[0]], p[e[1]])))
    )
    return AutomorphismGroup(tuple(found), vertex_orbits, edge_orbits)


def _orbits_of(items, perms, act) -> tuple:
    items = list(items)
    index = {x: i for i, x in enumerate(items)}
    parent = list(range(len(items)))

    def _find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in perms:
        for x in items:
            a, c = _find(index[x]), _find(index[act(p, x)])
            if a != c:
                parent[a] = c
    groups = {}
    for x in items:
        groups.setdefault(_find(index[x]), []).append(x)
    return tuple(sorted(tuple(sorted(v)) for v in groups.values()))


# ---------------------------------------------------------------------------
# consolidated report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryReport:
    d_eff: int
    d_g: int
    dla_capped: bool
    aut_order: int
    vertex_orbits: tuple
    edge_orbits: tuple
    ground_residual: float


def symmetry_report(h_effective: PauliSum, a: AnsatzDesign) -> SymmetryReport:
    """Assemble the symmetry diagnostics of an ansatz against its Hamiltonian.

    d_eff comes from the slot-generator closure of the circuit's own seed
    state; the exact ground state's projection residual is *reported* (a large
    value flags that the symmetric subspace misses the true ground state).
    """
    gens = slot_generators(a)
    seed = circuit_seed_state(a)
    basis = invariant_subspace(gens, seed)
    dla = dla_closure(gens)
    aut = graph_automorphisms(interaction_graph(h_effective))

    m = a.num_qubits - h_effective.num_qubits
    if m < 0:
        raise ValueError("ansatz register smaller than the Hamiltonian's")
    _, ground = exact_ground(h_effective)
    full = np.zeros(1 << a.num_qubits, dtype=complex)
    full[: 1 << h_effective.num_qubits] = ground.amplitudes  # top wires in |0>
    return SymmetryReport(
        d_eff=basis.dimension,
        d_g=dla.dimension,
        dla_capped=dla.capped,
        aut_order=aut.order,
        vertex_orbits=aut.vertex_orbits,
        edge_orbits=aut.edge_orbits,
        ground_residual=basis.residual(full),
    )


def save_symmetry_report(report: SymmetryReport, path) -> None:
    lines = [
        "symmetry report v1",
        f"d_eff {report.d_eff}",
        f"d_g {report.d_g}",
        f"dla_capped {int(report.dla_capped)}",
        f"aut_order {report.aut_order}",
        "vertex_orbits " + ";".join(",".join(map(str, o)) for o in report.vertex_orbits),
        "edge_orbits "
        + ";".join("|".join(f"{u}-{v}" for u, v in o) for o in report.edge_orbits),
        f"ground_residual {report.ground_residual!r}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
