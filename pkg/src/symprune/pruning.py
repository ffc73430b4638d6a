"""Symmetric pruning pipeline: system, structure, and spatial stages.

Starting from an over-parameterized asymmetric circuit (stage SP0), three
successive transformations impose the problem's symmetries:

* SP1 (system): delete every gate that touches the redundant wires — the
  qubits the Hamiltonian acts on as identity.  The surviving circuit commutes
  with any unitary confined to those wires.
* SP2 (structure): replace each layer by the canonical variational layer whose
  rotation generators are exactly the Hamiltonian's Pauli terms.  The ansatz
  then preserves the Hamiltonian's invariant subspaces by construction.
* SP3 (spatial): tie the parameters of gates whose generators are related by a
  graph automorphism of the interaction graph — one slot per (Pauli type,
  orbit) per layer.

Each stage yields fewer free parameters; none of them changes the register
size, so energies and states remain directly comparable across stages.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ansatz import AnsatzDesign, GateSpec, build_hva
from .hamiltonians import EmbeddedHamiltonian, interaction_graph
from .quantum_core import PauliSum
from .symmetry_analysis import graph_automorphisms

_STAGE_LABELS = ("SP0", "SP1", "SP2", "SP3")


@dataclass(frozen=True)
class PruneStage:
    label: str
    ansatz: AnsatzDesign
    removed_gate_count: int
    free_param_count: int

    def __post_init__(self):
        if self.label not in _STAGE_LABELS:
            raise ValueError(f"unknown stage label {self.label!r}")
        if self.removed_gate_count < 0:
            raise ValueError("removed_gate_count must be nonnegative")
        if self.free_param_count != self.ansatz.num_free_params:
            raise ValueError("free_param_count disagrees with the ansatz")

    @property
    def per_layer_free_params(self) -> int:
        layers = self.ansatz.num_layers
        total = self.free_param_count
        if layers == 0 or total % layers:
            raise ValueError("free parameters are not layer-uniform")
        return total // layers


def _reindex_slots(layers) -> tuple:
    """Compress parameter slots to 0..k-1 preserving their relative order."""
    used = sorted({g.param_slot for layer in layers for g in layer if g.kind == "rot"})
    remap = {old: new for new, old in enumerate(used)}
    out = []
    for layer in layers:
        out.append(tuple(
            GateSpec(g.kind, generator=g.generator, param_slot=remap[g.param_slot])
            if g.kind == "rot" else g
            for g in layer
        ))
    return tuple(out), len(used)


def sp1_system_prune(a: AnsatzDesign, h: EmbeddedHamiltonian) -> AnsatzDesign:
    """Remove every gate whose wires intersect the redundant (top) qubits."""
    if a.num_qubits != h.num_total_qubits:
        raise ValueError("ansatz register does not match the embedded Hamiltonian")
    n = h.num_system_qubits
    keep = lambda g: all(w < n for w in g.wires)
    preamble = tuple(g for g in a.preamble if keep(g))
    layers = tuple(tuple(g for g in layer if keep(g)) for layer in a.layers)
    layers, num_params = _reindex_slots(layers)
    return AnsatzDesign(a.num_qubits, layers, num_params, preamble=preamble)


def _embed_design(a: AnsatzDesign, num_qubits: int) -> AnsatzDesign:
    """View an ansatz on a larger register (identity on the new top wires)."""
    if num_qubits == a.num_qubits:
        return a

    def _embed_gate(g: GateSpec) -> GateSpec:
        if g.kind == "cnot":
            return g
        return GateSpec(g.kind, generator=g.generator.embed(num_qubits),
                        param_slot=g.param_slot, angle=g.angle)

    return AnsatzDesign(
        num_qubits,
        tuple(tuple(_embed_gate(g) for g in layer) for layer in a.layers),
        a.num_free_params,
        preamble=tuple(_embed_gate(g) for g in a.preamble),
    )


def sp2_structure_prune(a: AnsatzDesign, h: PauliSum,
                        include_mixers: bool = False) -> AnsatzDesign:
    """Replace every layer by the canonical term-set layer of h (same depth).

    The replacement keeps the register size of the input, acting as identity
    on wires beyond h's support, and starts from the |+>^n reference so that
    the restricted circuit can leave the computational-basis seed's symmetry
    sector (every term of a Z/X-type Hamiltonian commutes with the global
    X-flip, which would otherwise pin half the seed's weight in the wrong
    sector).
    """
    if not h.terms:
        raise ValueError("hamiltonian has no terms")
    core = build_hva(h, a.num_layers, prepare_reference=True,
                     include_mixers=include_mixers)
    return _embed_design(core, a.num_qubits)


def sp3_spatial_prune(a: AnsatzDesign, h: PauliSum) -> AnsatzDesign:
    """Tie parameters across automorphism orbits, one slot per orbit per layer.

    Single-qubit generators share a slot when their qubits lie in one vertex
    orbit; two-qubit generators when their supports lie in one edge orbit.
    Sharing is type-preserving: generators only ever share with generators of
    the same Pauli letters.
    """
    aut = graph_automorphisms(interaction_graph(h))
    vertex_orbit = {v: i for i, orb in enumerate(aut.vertex_orbits) for v in orb}
    edge_orbit = {e: i for i, orb in enumerate(aut.edge_orbits) for e in orb}

    def _orbit_key(g: GateSpec):
        sup = g.generator.support
        label = g.generator.label()
        letters = tuple(label[q] for q in sup)
        try:
            if len(sup) == 1:
                return ("v", letters, vertex_orbit[sup[0]])
            if len(sup) == 2:
                return ("e", letters, edge_orbit[sup])
        except KeyError:
            raise ValueError(
                f"generator {label} acts outside the interaction graph"
            ) from None
        raise ValueError("spatial pruning expects 1- or 2-local generators")

    layers = []
    next_slot = 0
    for layer in a.layers:
        key_to_slot = {}
        gates = []
        for g in layer:
            if g.kind != "rot":
                gates.append(g)
                continue
            key = _orbit_key(g)
            if key not in key_to_slot:
                key_to_slot[key] = next_slot
                next_slot += 1
            gates.append(GateSpec("rot", generator=g.generator,
                                  param_slot=key_to_slot[key]))
        layers.append(tuple(gates))
    return AnsatzDesign(a.num_qubits, tuple(layers), next_slot, preamble=a.preamble)


def symmetric_prune(a: AnsatzDesign, h: EmbeddedHamiltonian,
                    include_mixers: bool = False) -> list:
    """Run the full pipeline; returns the four stages [SP0, SP1, SP2, SP3]."""
    s1 = sp1_system_prune(a, h)
    s2 = sp2_structure_prune(s1, h.effective, include_mixers=include_mixers)
    s3 = sp3_spatial_prune(s2, h.effective)
    return [
        PruneStage("SP0", a, 0, a.num_free_params),
        PruneStage("SP1", s1, a.gate_count - s1.gate_count, s1.num_free_params),
        PruneStage("SP2", s2, max(0, s1.gate_count - s2.gate_count), s2.num_free_params),
        PruneStage("SP3", s3, 0, s3.num_free_params),
    ]
