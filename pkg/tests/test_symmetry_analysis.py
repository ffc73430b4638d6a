"""Invariant subspaces, Lie closures, kernel theory, graph automorphisms."""

import numpy as np
import pytest

from helpers import (
    all_connected_graphs,
    exhaustive_automorphisms,
    lie_closure_dimension,
    random_connected_graph,
)
from symprune.ansatz import build_hea, build_hva, sample_params
from symprune.hamiltonians import ProblemGraph, build_tfim
from symprune.pruning import sp3_spatial_prune
from symprune.quantum_core import PauliString, PauliSum, StateVector
from symprune.symmetry_analysis import (
    SubspaceBasis,
    circuit_seed_state,
    dla_closure,
    eqntk_projected,
    graph_automorphisms,
    invariant_subspace,
    monte_carlo_kernel,
    qntk,
    save_symmetry_report,
    slot_generators,
    symmetry_report,
    theory_fluctuation,
    theory_qbar,
    theory_qbar_s,
)
from symprune.training import LossSpec, energy_gradient


def _sp3_tfim(n, L):
    h = build_tfim(n)
    return h, sp3_spatial_prune(build_hva(h, L, prepare_reference=True), h)


# ---------------------------------------------------------------------------
# subspace bases
# ---------------------------------------------------------------------------

def test_subspace_basis_validation():
    col = np.zeros((4, 1), dtype=complex)
    col[0, 0] = 1.0
    b = SubspaceBasis(col)
    assert b.dimension == 1 and b.parent_dimension == 4
    with pytest.raises(ValueError):
        SubspaceBasis(col * 2.0)  # not normalized
    z0 = PauliString.single(2, 0, "Z")
    SubspaceBasis(col, generators=(z0,))  # |00> is a Z0 eigenvector
    with pytest.raises(ValueError):
        SubspaceBasis(col, generators=(PauliString.single(2, 0, "X"),))


def test_subspace_project_and_residual():
    m = np.zeros((4, 2), dtype=complex)
    m[0, 0] = m[1, 1] = 1.0
    b = SubspaceBasis(m)
    v = np.array([1.0, 2.0, 3.0, 0.0], dtype=complex)
    assert np.allclose(b.project(v), [1.0, 2.0])
    assert b.residual(v) == pytest.approx(3.0)
    cols = b.columns
    assert len(cols) == 2 and isinstance(cols[0], StateVector)


def test_invariant_subspace_small_closures():
    z0 = PauliString.single(2, 0, "Z")
    x0 = PauliString.single(2, 0, "X")
    seed = StateVector.zero_state(2)
    assert invariant_subspace([z0], seed).dimension == 1
    assert invariant_subspace([x0], seed).dimension == 2
    # all single-qubit rotations explore the whole space
    hea = build_hea(3, 1)
    full = invariant_subspace(hea.generator_set, StateVector.zero_state(3))
    assert full.dimension == 8


def test_invariant_subspace_validation():
    seed = StateVector.zero_state(2)
    with pytest.raises(ValueError):
        invariant_subspace([PauliString.single(2, 0, "Z")], seed, tol=0.0)
    with pytest.raises(ValueError):
        invariant_subspace(
            [PauliString(2, 1, 1, phase_exp=1)], seed)  # non-Hermitian
    with pytest.raises(ValueError):
        invariant_subspace(
            [PauliString.single(2, 0, "Z")],
            StateVector(2, np.zeros(4, dtype=complex)))


def test_invariant_subspace_order_independent():
    h, a = _sp3_tfim(4, 2)
    gens = slot_generators(a)
    seed = circuit_seed_state(a)
    fwd = invariant_subspace(gens, seed)
    rev = invariant_subspace(tuple(reversed(gens)), seed)
    assert fwd.dimension == rev.dimension
    # same span: each column of one has zero residual against the other
    for k in range(fwd.dimension):
        assert rev.residual(fwd.matrix[:, k]) < 1e-9


def test_walled_term_circuit_closure_is_half_space():
    # every generator commutes with the global X-flip, so the closure of the
    # |+>^n seed stays inside one flip sector: dimension 2^(n-1)
    for n in (3, 4):
        h = build_tfim(n)
        a = build_hva(h, 2, prepare_reference=True)
        basis = invariant_subspace(a.generator_set, circuit_seed_state(a))
        assert basis.dimension == 2 ** (n - 1)


def test_slot_generators_sum_tied_occurrences():
    h, a = _sp3_tfim(4, 3)
    gens = slot_generators(a)
    # orbits of the 4-chain: {0,3}, {1,2} vertices; {01,23}, {12} edges,
    # deduplicated across the three layers
    assert len(gens) == 4
    sums = [g for g in gens if isinstance(g, PauliSum)]
    singles = [g for g in gens if isinstance(g, PauliString)]
    assert len(sums) == 3 and len(singles) == 1
    assert singles[0].label() == "IZZI"
    # unshared circuits reduce to their distinct rotation generators
    bare = build_hva(h, 2)
    assert slot_generators(bare) == bare.generator_set


def test_sp3_effective_dimension_is_six_on_the_four_chain():
    h, a = _sp3_tfim(4, 3)
    basis = invariant_subspace(slot_generators(a), circuit_seed_state(a))
    assert basis.dimension == 6
    h_star = basis.matrix.conj().T @ h.to_dense() @ basis.matrix
    assert np.trace(h_star @ h_star).real == pytest.approx(54.0)


def test_circuit_seed_state():
    h = build_tfim(3)
    bare = build_hva(h, 1)
    assert np.allclose(circuit_seed_state(bare).amplitudes,
                       StateVector.zero_state(3).amplitudes)
    walled = build_hva(h, 1, prepare_reference=True)
    assert np.allclose(circuit_seed_state(walled).amplitudes,
                       np.full(8, 8 ** -0.5))


# ---------------------------------------------------------------------------
# dynamical Lie algebra
# ---------------------------------------------------------------------------

def test_dla_closure_small_algebras():
    x = PauliString.single(1, 0, "X")
    z = PauliString.single(1, 0, "Z")
    assert dla_closure([x]).dimension == 1
    res = dla_closure([x, z])
    assert res.dimension == 3 and not res.capped
    capped = dla_closure([x, z], cap=2)
    assert capped.capped and capped.dimension == 2
    with pytest.raises(ValueError):
        dla_closure([])
    with pytest.raises(ValueError):
        dla_closure([x], tol=-1.0)


def test_dla_closure_matches_rank_oracle():
    cases = [
        [PauliString.single(2, 0, "X"), PauliString.single(2, 1, "Z")],
        [p for _, p in build_tfim(2).terms],
        [p for _, p in build_tfim(3).terms],
    ]
    for gens in cases:
        got = dla_closure(gens).dimension
        want = lie_closure_dimension([g.to_dense() for g in gens])
        assert got == want


def test_global_sum_algebra_dimension_is_n_squared():
    for n in range(2, 6):
        h = build_tfim(n)
        xs = PauliSum.from_terms(
            n, [(1.0, PauliString.single(n, q, "X")) for q in range(n)])
        zz = PauliSum.from_terms(
            n, [(1.0, p) for _, p in h.terms if p.weight == 2])
        assert dla_closure([xs, zz]).dimension == n * n


# ---------------------------------------------------------------------------
# kernel values
# ---------------------------------------------------------------------------

def test_qntk_single_qubit_analytic():
    # E(theta) = <0| e^{+i theta Y} Z e^{-i theta Y} |0> = cos(2 theta)
    from symprune.ansatz import AnsatzDesign, GateSpec
    y = PauliString.single(1, 0, "Y")
    a = AnsatzDesign(1, ((GateSpec("rot", generator=y, param_slot=0),),), 1)
    h = PauliSum.from_terms(1, [(1.0, PauliString.single(1, 0, "Z"))])
    spec = LossSpec(h)
    for theta in (0.0, 0.3, -1.1, np.pi / 4):
        expected = 4.0 * np.sin(2 * theta) ** 2
        assert qntk(a, np.array([theta]), spec) == pytest.approx(
            expected, abs=1e-10)


def test_qntk_equals_gradient_norm_squared():
    h = build_tfim(3)
    a = build_hea(3, 2)
    spec = LossSpec(h)
    params = sample_params(a, 13)
    _, de = energy_gradient(a, params, h)
    assert qntk(a, params, spec) == pytest.approx(float(de @ de), rel=1e-12)


def test_projected_kernel_matches_full_space():
    for n in (3, 4):
        h, a = _sp3_tfim(n, 3)
        basis = invariant_subspace(a.generator_set, circuit_seed_state(a))
        assert basis.dimension == 2 ** (n - 1)
        spec = LossSpec(h)
        for s in range(5):
            params = sample_params(a, s)
            full = qntk(a, params, spec)
            proj = eqntk_projected(a, params, h, basis)
            assert proj == pytest.approx(full, abs=1e-8)


def test_projected_kernel_in_trivial_full_basis():
    h = build_tfim(3)
    a = build_hea(3, 1)
    basis = SubspaceBasis(np.eye(8, dtype=complex))
    params = sample_params(a, 3)
    assert eqntk_projected(a, params, h, basis) == pytest.approx(
        qntk(a, params, LossSpec(h)), abs=1e-8)


def test_projected_kernel_leak_errors():
    h = build_tfim(2)
    a = build_hea(2, 1)
    params = sample_params(a, 0)
    # subspace spanned by |00> alone: the seed fits, X rotations leak
    col = np.zeros((4, 1), dtype=complex)
    col[0, 0] = 1.0
    with pytest.raises(ValueError, match="preserve"):
        eqntk_projected(a, params, h, SubspaceBasis(col))
    # subspace that misses the seed entirely
    col2 = np.zeros((4, 1), dtype=complex)
    col2[3, 0] = 1.0
    with pytest.raises(ValueError, match="seed"):
        eqntk_projected(a, params, h, SubspaceBasis(col2))
    with pytest.raises(ValueError, match="register"):
        eqntk_projected(a, params, h, SubspaceBasis(np.eye(8, dtype=complex)))


# ---------------------------------------------------------------------------
# closed-form statistics
# ---------------------------------------------------------------------------

def test_theory_qbar_values():
    h = build_tfim(4)
    # Tr(H^2) = 112 on 16 dimensions
    assert theory_qbar(960, h) == pytest.approx(420.0)
    _, a = _sp3_tfim(4, 3)
    basis = invariant_subspace(slot_generators(a), circuit_seed_state(a))
    h_star = basis.matrix.conj().T @ h.to_dense() @ basis.matrix
    assert theory_qbar_s(160, h_star, basis.dimension) == pytest.approx(240.0)
    with pytest.raises(ValueError):
        theory_qbar_s(10, h_star, 0)


def test_theory_fluctuation_hand_computed():
    h_star = np.diag([1.0, -1.0])
    # m2 = I: Tr^2 = 4, Tr(m2^2) = 2 -> (L/16) * (32 + 24) = 3.5 L
    assert theory_fluctuation(10, h_star, 2) == pytest.approx(35.0)
    with pytest.raises(ValueError):
        theory_fluctuation(10, h_star, -1)


def test_monte_carlo_kernel_reproducible_prefix_stable():
    h = build_tfim(2)
    a = build_hea(2, 1)
    spec = LossSpec(h)
    m1, s1, x1 = monte_carlo_kernel(a, spec, 6, 42)
    m2, s2, x2 = monte_carlo_kernel(a, spec, 6, 42)
    assert np.array_equal(x1, x2) and m1 == m2 and s1 == s2
    _, _, x3 = monte_carlo_kernel(a, spec, 3, 42)
    assert np.array_equal(x1[:3], x3)  # per-trial seeding
    assert m1 == pytest.approx(float(np.mean(x1)))
    assert s1 == pytest.approx(float(np.std(x1, ddof=1)))
    with pytest.raises(ValueError):
        monte_carlo_kernel(a, spec, 1, 0)


# ---------------------------------------------------------------------------
# graph automorphisms
# ---------------------------------------------------------------------------

def test_automorphisms_match_exhaustive_on_all_small_graphs():
    for n in (2, 3, 4):
        for edges in all_connected_graphs(n):
            g = ProblemGraph(n, edges)
            got = set(graph_automorphisms(g).elements)
            assert got == exhaustive_automorphisms(n, edges)


def test_automorphisms_match_exhaustive_on_random_graphs():
    rng = np.random.default_rng(2026)
    for n in (5, 6):
        for _ in range(6):
            g = ProblemGraph(n, random_connected_graph(rng, n, 0.5))
            got = set(graph_automorphisms(g).elements)
            assert got == exhaustive_automorphisms(g.num_vertices, g.edges)


def test_automorphism_orders_of_named_graphs():
    path6 = ProblemGraph(6, tuple((j, j + 1) for j in range(5)))
    aut = graph_automorphisms(path6)
    assert aut.order == 2
    assert (5, 4, 3, 2, 1, 0) in aut.elements  # the reversal
    cycle6 = ProblemGraph(6, tuple((j, (j + 1) % 6) for j in range(6)))
    assert graph_automorphisms(cycle6).order == 12
    k6 = ProblemGraph(6, tuple(
        (u, v) for u in range(6) for v in range(u + 1, 6)))
    assert graph_automorphisms(k6).order == 720
    k33 = ProblemGraph(6, tuple((u, v) for u in range(3) for v in range(3, 6)))
    assert graph_automorphisms(k33).order == 72
    star = ProblemGraph(6, tuple((0, v) for v in range(1, 6)))
    assert graph_automorphisms(star).order == 120
    prism = ProblemGraph(6, ((0, 1), (1, 2), (0, 2),
                             (3, 4), (4, 5), (3, 5),
                             (0, 3), (1, 4), (2, 5)))
    assert graph_automorphisms(prism).order == 12
    with pytest.raises(ValueError):
        graph_automorphisms(ProblemGraph(17, ((0, 1),)))


def test_automorphism_orbits_of_the_four_chain():
    g = ProblemGraph(4, ((0, 1), (1, 2), (2, 3)))
    aut = graph_automorphisms(g)
    assert aut.order == 2
    assert aut.vertex_orbits == ((0, 3), (1, 2))
    assert aut.edge_orbits == (((0, 1), (2, 3)), ((1, 2),))


def test_automorphisms_preserve_the_hamiltonian():
    # relabeling qubits by any automorphism of the coupling graph fixes H
    n = 4
    h = build_tfim(n)
    from symprune.hamiltonians import interaction_graph
    aut = graph_automorphisms(interaction_graph(h))
    dense = h.to_dense()
    dim = 1 << n
    for perm in aut.elements:
        rows = np.zeros(dim, dtype=int)
        for b in range(dim):
            img = 0
            for q in range(n):
                img |= ((b >> q) & 1) << perm[q]
            rows[b] = img
        p = np.zeros((dim, dim))
        p[rows, np.arange(dim)] = 1.0
        assert np.allclose(p @ dense @ p.T, dense, atol=1e-12)


# ---------------------------------------------------------------------------
# consolidated report
# ---------------------------------------------------------------------------

def test_symmetry_report_and_save(tmp_path):
    h, a = _sp3_tfim(4, 3)
    rep = symmetry_report(h, a)
    assert rep.d_eff == 6
    assert rep.d_g == 16 and not rep.dla_capped
    assert rep.aut_order == 2
    assert rep.vertex_orbits == ((0, 3), (1, 2))
    assert rep.edge_orbits == (((0, 1), (2, 3)), ((1, 2),))
    assert rep.ground_residual < 1e-8  # symmetric subspace holds the ground state
    path = tmp_path / "report.txt"
    save_symmetry_report(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "symmetry report v1"
    assert "d_eff 6" in lines and "aut_order 2" in lines
    with pytest.raises(ValueError):
        symmetry_report(build_tfim(5), a)  # register smaller than H
