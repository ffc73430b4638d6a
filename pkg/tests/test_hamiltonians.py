"""Problem graphs, Hamiltonians, embeddings, and their exhaustive oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import dense_pauli, exhaustive_max_cut
from symprune.hamiltonians import (
    EmbeddedHamiltonian,
    ProblemGraph,
    brute_force_max_cut,
    build_maxcut,
    build_tfim,
    embed_identity,
    erdos_renyi,
    interaction_graph,
    project_hamiltonian,
    random_regular,
    read_graph,
    trace_h_squared,
    write_graph,
)
from symprune.quantum_core import PauliString, PauliSum, exact_ground


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

def test_graph_normalizes_and_validates_edges():
    g = ProblemGraph(4, ((3, 1), (0, 2)))
    assert g.edges == ((0, 2), (1, 3))
    assert g.num_edges == 2
    assert g.degrees() == [1, 1, 1, 1]
    assert g.neighbors(1) == [3]
    with pytest.raises(ValueError):
        ProblemGraph(3, ((1, 1),))
    with pytest.raises(ValueError):
        ProblemGraph(3, ((0, 3),))
    with pytest.raises(ValueError):
        ProblemGraph(3, ((0, 1), (1, 0)))


def test_erdos_renyi_reproducible_and_extremes():
    a = erdos_renyi(6, 0.5, 42)
    b = erdos_renyi(6, 0.5, 42)
    assert a.edges == b.edges and a.seed == 42
    assert erdos_renyi(5, 0.0, 1).num_edges == 0
    assert erdos_renyi(5, 1.0, 1).num_edges == 10
    with pytest.raises(ValueError):
        erdos_renyi(4, 1.5, 0)


@given(st.integers(0, 1000))
def test_random_regular_degrees(seed):
    g = random_regular(6, 3, seed)
    assert g.degrees() == [3] * 6


def test_random_regular_validation():
    with pytest.raises(ValueError):
        random_regular(5, 3, 0)  # odd stub count
    with pytest.raises(ValueError):
        random_regular(4, 4, 0)


def test_graph_file_round_trip(tmp_path):
    g = erdos_renyi(7, 0.4, 3)
    path = tmp_path / "graph.txt"
    write_graph(g, path)
    back = read_graph(path)
    assert back.num_vertices == g.num_vertices and back.edges == g.edges
    text = path.read_text().splitlines()
    assert text[0] == f"{g.num_vertices} {g.num_edges}"
    assert len(text) == 1 + g.num_edges


def test_read_graph_rejects_bad_edge_count(tmp_path):
    path = tmp_path / "graph.txt"
    path.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError):
        read_graph(path)


# ---------------------------------------------------------------------------
# TFIM
# ---------------------------------------------------------------------------

def test_tfim_terms_and_dense_form():
    h = build_tfim(4, h=0.7)
    assert h.num_terms == 7  # 4 fields + 3 couplings
    expected = sum(-0.7 * dense_pauli("IIII"[:j] + "X" + "III"[j:]) for j in range(4))
    for j in range(3):
        zz = ["I"] * 4
        zz[j] = zz[j + 1] = "Z"
        expected = expected + -1.0 * dense_pauli("".join(zz))
    assert np.allclose(h.to_dense(), expected, atol=1e-12)
    with pytest.raises(ValueError):
        build_tfim(1)


def test_tfim_ground_energy_matches_numpy():
    for n in (2, 3, 5):
        h = build_tfim(n)
        e0, _ = exact_ground(h)
        assert e0 == pytest.approx(np.linalg.eigvalsh(h.to_dense())[0], abs=1e-9)


def test_trace_h_squared_matches_dense_trace():
    h = build_tfim(4)
    dense = h.to_dense()
    assert trace_h_squared(h) == pytest.approx(np.trace(dense @ dense).real)
    assert trace_h_squared(h) == pytest.approx(112.0)


# ---------------------------------------------------------------------------
# MaxCut
# ---------------------------------------------------------------------------

def test_maxcut_is_diagonal_negated_cut_counter():
    g = ProblemGraph(3, ((0, 1), (1, 2)))
    h = build_maxcut(g)
    dense = h.to_dense()
    assert np.allclose(dense, np.diag(np.diag(dense)))
    # basis state 0b001 puts vertex 0 alone: both edges... only (0,1) is cut
    diag = np.diag(dense).real
    for b in range(8):
        bits = [(b >> v) & 1 for v in range(3)]
        cut = sum(1 for u, v in g.edges if bits[u] != bits[v])
        assert diag[b] == pytest.approx(-cut)
    with pytest.raises(ValueError):
        build_maxcut(ProblemGraph(3, ()))


def test_maxcut_ground_equals_exhaustive_cut():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 12:
        n = int(rng.integers(3, 7))
        g = erdos_renyi(n, 0.5, int(rng.integers(0, 10 ** 6)))
        if g.num_edges == 0:
            continue
        best = exhaustive_max_cut(n, g.edges)
        assert brute_force_max_cut(g) == best
        e0, _ = exact_ground(build_maxcut(g))
        assert e0 == pytest.approx(-best, abs=1e-9)
        checked += 1


def test_brute_force_max_cut_budget():
    with pytest.raises(ValueError):
        brute_force_max_cut(ProblemGraph(21, ((0, 1),)))


# ---------------------------------------------------------------------------
# embedding, projection, interaction graph
# ---------------------------------------------------------------------------

def test_embed_identity_adds_top_wires():
    h = build_tfim(3)
    emb = embed_identity(h, 2)
    assert isinstance(emb, EmbeddedHamiltonian)
    assert emb.num_system_qubits == 3 and emb.num_total_qubits == 5
    assert emb.effective is h
    assert np.allclose(emb.full.to_dense(), np.kron(np.eye(4), h.to_dense()))
    with pytest.raises(ValueError):
        embed_identity(h, -1)


def test_embedded_spectrum_is_degenerate_copy():
    h = build_tfim(2)
    emb = embed_identity(h, 1)
    base = np.linalg.eigvalsh(h.to_dense())
    lifted = np.linalg.eigvalsh(emb.full.to_dense())
    assert np.allclose(lifted, np.sort(np.concatenate([base, base])))


def test_project_hamiltonian_values_and_validation():
    h = build_tfim(2)
    dense = h.to_dense()
    evals, vecs = np.linalg.eigh(dense)
    basis = vecs[:, :2]  # span of the two lowest eigenvectors
    proj = project_hamiltonian(h, basis)
    assert np.allclose(proj, np.diag(evals[:2]), atol=1e-10)
    with pytest.raises(ValueError):
        project_hamiltonian(h, basis * 2.0)  # not orthonormal
    with pytest.raises(ValueError):
        project_hamiltonian(h, np.eye(8)[:, :2])  # wrong register


def test_interaction_graph_recovers_couplings():
    assert interaction_graph(build_tfim(5)).edges == tuple(
        (j, j + 1) for j in range(4))
    g = ProblemGraph(4, ((0, 1), (0, 2), (1, 3)))
    assert interaction_graph(build_maxcut(g)).edges == g.edges
    three_body = PauliSum.from_terms(
        3, [(1.0, PauliString.from_label("ZZZ"))])
    with pytest.raises(ValueError):
        interaction_graph(three_body)
