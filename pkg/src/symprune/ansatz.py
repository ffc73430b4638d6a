"""Layered parameterized circuits with explicit parameter sharing.

An ansatz is a sequence of layers; each layer is a sequence of gates.  Gates
are Pauli-string rotations exp(-i*theta*P) carrying a parameter slot, fixed
CNOTs, or constant-angle rotations (used for reference-state preparation).
Parameter sharing is explicit: several rotation gates may point at the same
slot, and a parameter vector is a plain float array indexed by slot.  An
optional preamble of constant gates runs before the first layer and carries
no parameters.  Ansatz text files list one gate per line (``ROT <label>
<slot>``, ``CNOT <c> <t>``, or ``FIX <label> <angle>`` in a ``prep`` section),
which carries the full sharing map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    PauliString,
    PauliSum,
    StateVector,
    apply_cnot,
    apply_pauli_rotation,
)


@dataclass(frozen=True)
class GateSpec:
    kind: str  # "rot", "cnot", or "fixed" (constant-angle rotation)
    generator: PauliString = None
    control: int = None
    target: int = None
    param_slot: int = None
    angle: float = None

    def __post_init__(self):
        if self.kind == "rot":
            if self.generator is None or self.param_slot is None:
                raise ValueError("rotation gates need a generator and a slot")
            if self.generator.phase_exp != 0:
                raise ValueError("rotation generators must carry phase +1")
            if self.angle is not None:
                raise ValueError("parameterized rotations read their angle from the slot")
        elif self.kind == "cnot":
            if self.control is None or self.target is None:
                raise ValueError("cnot gates need control and target")
            if self.param_slot is not None or self.angle is not None:
                raise ValueError("cnot gates carry neither slot nor angle")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.kind == "fixed":
            if self.generator is None or self.angle is None:
                raise ValueError("fixed rotations need a generator and an angle")
            if self.generator.phase_exp != 0:
                raise ValueError("rotation generators must carry phase +1")
            if self.param_slot is not None:
                raise ValueError("fixed rotations never carry a slot")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def wires(self) -> tuple:
        if self.kind == "cnot":
            return tuple(sorted((self.control, self.target)))
        return self.generator.support


@dataclass(frozen=True)
class AnsatzDesign:
    num_qubits: int
    layers: tuple  # tuple of tuples of GateSpec
    num_free_params: int
    preamble: tuple = ()  # constant gates applied once, before the first layer

    def __post_init__(self):
        for g in self.preamble:
            if g.kind == "rot":
                raise ValueError("preamble gates must be parameter-free")
            if g.kind == "fixed" and g.generator.num_qubits != self.num_qubits:
                raise ValueError("generator register mismatch")
        used = set()
        for layer in self.layers:
            for g in layer:
                if g.kind == "rot":
                    if not 0 <= g.param_slot < self.num_free_params:
                        raise ValueError("slot outside the free-parameter range")
                    used.add(g.param_slot)
                    if g.generator.num_qubits != self.num_qubits:
                        raise ValueError("generator register mismatch")
        if used != set(range(self.num_free_params)):
            raise ValueError("every free-parameter slot must be referenced")

    # -- structure queries ------------------------------------------------

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return len(self.preamble) + sum(len(layer) for layer in self.layers)

    @property
    def rotation_count(self) -> int:
        """Number of *parameterized* rotation occurrences."""
        return sum(1 for layer in self.layers for g in layer if g.kind == "rot")

    @property
    def sharing(self) -> dict:
        """(layer index, gate position) -> slot, for every rotation gate."""
        out = {}
        for li, layer in enumerate(self.layers):
            for pos, g in enumerate(layer):
                if g.kind == "rot":
                    out[(li, pos)] = g.param_slot
        return out

    @property
    def generator_set(self) -> tuple:
        """Distinct rotation generators, in first-appearance order."""
        seen = {}
        for layer in self.layers:
            for g in layer:
                if g.kind == "rot":
                    key = (g.generator.x_mask, g.generator.z_mask)
                    seen.setdefault(key, g.generator)
        return tuple(seen.values())

    def slot_occurrences(self) -> list:
        """For each slot, the list of (layer, position) rotation gates bound to it."""
        occ = [[] for _ in range(self.num_free_params)]
        for li, layer in enumerate(self.layers):
            for pos, g in enumerate(layer):
                if g.kind == "rot":
                    occ[g.param_slot].append((li, pos))
        return occ

    def all_gates(self):
        yield from self.preamble
        for layer in self.layers:
            yield from layer


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_hea(n: int, L: int) -> AnsatzDesign:
    """Hardware-efficient ansatz: per layer, RX/RY/RZ on every qubit, a CNOT
    ladder on pairs (0,1),(2,3),..., the rotations again, then a ladder on
    pairs (1,2),(3,4),...; 6n fresh parameters per layer."""
    if n < 2 or L < 1:
        raise ValueError("need n >= 2 and L >= 1")
    layers = []
    slot = 0
    for _ in range(L):
        gates = []
        for half in range(2):
            for q in range(n):
                for letter in "XYZ":
                    gates.append(
                        GateSpec("rot", generator=PauliString.single(n, q, letter), param_slot=slot)
                    )
                    slot += 1
            for c in range(half, n - 1, 2):
                gates.append(GateSpec("cnot", control=c, target=c + 1))
        layers.append(tuple(gates))
    return AnsatzDesign(n, tuple(layers), slot)


def hva_generator_order(h: PauliSum) -> tuple:
    """Canonical generator ordering: fewer-body terms first, then by support,
    then by letter pattern; identity terms are dropped (pure global phase)."""
    gens = [p for _, p in h.terms if not p.is_identity]
    return tuple(sorted(gens, key=lambda p: (p.weight, p.support, p.label())))


def reference_preamble(n: int) -> tuple:
    """Constant exp(-i*pi/4*Y_j) on every wire: maps |0...0> to |+>^n.

    The uniform superposition is the symmetry-adapted reference for
    Hamiltonian-term circuits: every generator of such a circuit commutes with
    the global flip (product of X), so the weight of the input state in each
    flip sector is conserved.  |0...0> splits half-and-half across the two
    sectors and therefore can never reach a ground state living in one of
    them, whereas |+>^n sits entirely in the sector that contains it.
    """
    return tuple(
        GateSpec("fixed", generator=PauliString.single(n, q, "Y"), angle=np.pi / 4)
        for q in range(n)
    )


def build_hva(h: PauliSum, L: int, prepare_reference: bool = False,
              include_mixers: bool = False) -> AnsatzDesign:
    """Hamiltonian variational ansatz: each layer rotates by every Pauli term
    of h once, in canonical order; no sharing.

    include_mixers=True appends one transverse X rotation per wire after the
    cost terms of each layer (the alternating-operator form).  This matters
    when every term of h is diagonal (MaxCut-style cost functions): the cost
    layer alone only changes phases of computational basis states, leaving
    every basis-state population — and hence the energy — frozen.  The bare
    default keeps the layer exactly the term set of h.

    With prepare_reference=True the circuit starts from |+>^n via a constant
    preamble; training-oriented callers want this, while the default keeps
    U(0) = identity.
    """
    gens = hva_generator_order(h)
    if not gens:
        raise ValueError("hamiltonian has no non-identity terms")
    n = h.num_qubits
    mixers = ()
    if include_mixers:
        mixers = tuple(PauliString.single(n, q, "X") for q in range(n))
    layers = []
    slot = 0
    for _ in range(L):
        gates = []
        for g in gens + mixers:
            gates.append(GateSpec("rot", generator=g, param_slot=slot))
            slot += 1
        layers.append(tuple(gates))
    preamble = reference_preamble(n) if prepare_reference else ()
    return AnsatzDesign(n, tuple(layers), slot, preamble=preamble)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def prepare_state(a: AnsatzDesign, params, input_state: StateVector = None) -> StateVector:
    """|psi(theta)> = U(theta)|input>; the reference (unoptimized) evaluator."""
    params = np.asarray(params, dtype=float)
    if params.shape != (a.num_free_params,):
        raise ValueError("parameter count mismatch")
    state = StateVector.zero_state(a.num_qubits) if input_state is None else input_state.copy()
    if state.num_qubits != a.num_qubits:
        raise ValueError("input state register mismatch")
    for gate in a.all_gates():
        if gate.kind == "rot":
            state = apply_pauli_rotation(state, gate.generator, params[gate.param_slot])
        elif gate.kind == "fixed":
            state = apply_pauli_rotation(state, gate.generator, gate.angle)
        else:
            state = apply_cnot(state, gate.control, gate.target)
    return state


def sample_params(a: AnsatzDesign, seed) -> np.ndarray:
    """I.i.d. uniform draws on [-pi, pi], one per free slot."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, a.num_free_params)


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def save_ansatz(a: AnsatzDesign, path) -> None:
    lines = [
        "ansatz v1",
        f"qubits {a.num_qubits}",
        f"free_params {a.num_free_params}",
        f"layers {a.num_layers}",
    ]
    if a.preamble:
        lines.append("prep")
        for g in a.preamble:
            if g.kind == "fixed":
                lines.append(f"FIX {g.generator.label()} {g.angle!r}")
            else:
                lines.append(f"CNOT {g.control} {g.target}")
    for li, layer in enumerate(a.layers):
        lines.append(f"layer {li}")
        for g in layer:
            if g.kind == "rot":
                lines.append(f"ROT {g.generator.label()} {g.param_slot}")
            elif g.kind == "fixed":
                lines.append(f"FIX {g.generator.label()} {g.angle!r}")
            else:
                lines.append(f"CNOT {g.control} {g.target}")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_gate(parts):
    if parts[0] == "ROT":
        return GateSpec("rot", generator=PauliString.from_label(parts[1]), param_slot=int(parts[2]))
    if parts[0] == "FIX":
        return GateSpec("fixed", generator=PauliString.from_label(parts[1]), angle=float(parts[2]))
    if parts[0] == "CNOT":
        return GateSpec("cnot", control=int(parts[1]), target=int(parts[2]))
    raise ValueError(f"bad gate line: {' '.join(parts)!r}")


def load_ansatz(path) -> AnsatzDesign:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "ansatz v1" or lines[-1] != "end":
        raise ValueError("unrecognized ansatz file")
    n = int(lines[1].split()[1])
    free = int(lines[2].split()[1])
    preamble = []
    layers = []
    current = None  # None means "before any layer header"
    in_prep = False
    for ln in lines[4:-1]:
        parts = ln.split()
        if parts[0] == "prep":
            in_prep = True
        elif parts[0] == "layer":
            in_prep = False
            if current is not None:
                layers.append(tuple(current))
            current = []
        elif in_prep:
            preamble.append(_parse_gate(parts))
        elif current is not None:
            current.append(_parse_gate(parts))
        else:
            raise ValueError(f"gate line outside any section: {ln!r}")
    if current is not None:
        layers.append(tuple(current))
    return AnsatzDesign(n, tuple(layers), free, preamble=tuple(preamble))
