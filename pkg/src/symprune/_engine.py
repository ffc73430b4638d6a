"""Compiled circuit evaluation: forward states, energies, adjoint derivatives.

This is the workhorse behind training and kernel estimation.  A circuit is
compiled once into flat arrays (per-rotation gather tables, CNOT wire indices,
Hamiltonian action tables); evaluation then runs either through numba kernels
(when importable) or through equivalent vectorized numpy code.  Both paths
perform the same arithmetic; tests pin them against the reference evaluator in
`ansatz.prepare_state`.

Angles here are *per rotation occurrence* (length R), not per free slot; slot
expansion/aggregation is a gather/scatter handled by the callers through
`CompiledCircuit.rot_slots`.  The adjoint pass returns d<H>/d(angle_r) for
every occurrence r, which is mathematically identical to the parameter-shift
value f(a + pi/4) - f(a - pi/4) for involutory generators.
"""

from __future__ import annotations

import os

import numpy as np

from .quantum_core import PauliSum, PauliString

_USE_NUMBA = False
if not os.environ.get("SYMPRUNE_DISABLE_NUMBA"):
    try:
        import numba

        _USE_NUMBA = True
    except ImportError:  # pragma: no cover - environment dependent
        _USE_NUMBA = False

BACKEND = "numba" if _USE_NUMBA else "numpy"


class CompiledCircuit:
    """Flat-array form of an AnsatzDesign, ready for the kernels below."""

    def __init__(self, design):
        self.num_qubits = design.num_qubits
        self.dim = 1 << design.num_qubits
        self.num_free_params = design.num_free_params
        kinds = []
        rot_rows = []
        controls = []
        targets = []
        x_masks = []
        fac_rows = []
        rot_slots = []
        base_angles = []
        for gate in design.all_gates():
            if gate.kind in ("rot", "fixed"):
                kinds.append(0)
                rot_rows.append(len(x_masks))
                controls.append(0)
                targets.append(0)
                idx, fac = gate.generator.action_tables()
                # store fac indexed by *output* basis label: (P v)[i] = fac[i^x] v[i^x]
                x_masks.append(gate.generator.x_mask)
                fac_rows.append(fac)
                rot_slots.append(gate.param_slot if gate.kind == "rot" else -1)
                base_angles.append(0.0 if gate.kind == "rot" else gate.angle)
            else:
                kinds.append(1)
                rot_rows.append(-1)
                controls.append(gate.control)
                targets.append(gate.target)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.rot_rows = np.asarray(rot_rows, dtype=np.int64)
        self.controls = np.asarray(controls, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)
        self.x_masks = np.asarray(x_masks, dtype=np.int64)
        self.fac = (
            np.ascontiguousarray(np.vstack(fac_rows))
            if fac_rows
            else np.zeros((0, self.dim), dtype=complex)
        )
        self.rot_slots = np.asarray(rot_slots, dtype=np.int64)
        self.base_angles = np.asarray(base_angles, dtype=float)
        self.param_rows = np.nonzero(self.rot_slots >= 0)[0]
        self.num_rotations = len(x_masks)

    def expand_params(self, theta) -> np.ndarray:
        """Free-parameter vector -> per-occurrence angle vector.

        Constant-angle rows keep their baked angle; parameterized rows read
        from theta through the slot map.
        """
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.num_free_params,):
            raise ValueError("parameter count mismatch")
        angles = self.base_angles.copy()
        angles[self.param_rows] = theta[self.rot_slots[self.param_rows]]
        return angles

    def aggregate(self, per_occurrence) -> np.ndarray:
        """Sum per-occurrence derivatives into free-slot derivatives."""
        per_occurrence = np.asarray(per_occurrence)
        return np.bincount(
            self.rot_slots[self.param_rows],
            weights=per_occurrence[self.param_rows],
            minlength=self.num_free_params,
        )


class CompiledHamiltonian:
    def __init__(self, h: PauliSum):
        self.num_qubits = h.num_qubits
        self.dim = 1 << h.num_qubits
        xs = []
        facs = []
        for coeff, p in h.terms:
            idx, fac = p.action_tables()
            xs.append(p.x_mask)
            facs.append(coeff * fac)
        self.x_masks = np.asarray(xs, dtype=np.int64)
        self.fac = (
            np.ascontiguousarray(np.vstack(facs))
            if facs
            else np.zeros((0, self.dim), dtype=complex)
        )


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------

def _np_apply(v, cc: CompiledCircuit, angles, invert=False):
    basis = np.arange(cc.dim)
    order = range(len(cc.kinds)) if not invert else range(len(cc.kinds) - 1, -1, -1)
    sign = -1.0 if invert else 1.0
    for g in order:
        if cc.kinds[g] == 0:
            r = cc.rot_rows[g]
            idx = basis ^ cc.x_masks[r]
            a = sign * angles[r]
            v = np.cos(a) * v - 1j * np.sin(a) * (cc.fac[r, idx] * v[idx])
        else:
            bit = (basis >> cc.controls[g]) & 1
            perm = basis ^ (bit << cc.targets[g])
            v = v[perm]
    return v


def _np_ham_apply(v, ch: CompiledHamiltonian):
    basis = np.arange(ch.dim)
    out = np.zeros_like(v)
    for t in range(len(ch.x_masks)):
        idx = basis ^ ch.x_masks[t]
        out += ch.fac[t, idx] * v[idx]
    return out


def _np_adjoint(v0, cc: CompiledCircuit, ch: CompiledHamiltonian, angles):
    basis = np.arange(cc.dim)
    phi = _np_apply(v0.copy(), cc, angles)
    mu = _np_ham_apply(phi, ch)
    energy = float(np.real(np.vdot(phi, mu)))
    derivs = np.zeros(cc.num_rotations)
    for g in range(len(cc.kinds) - 1, -1, -1):
        if cc.kinds[g] == 0:
            r = cc.rot_rows[g]
            idx = basis ^ cc.x_masks[r]
            pphi = cc.fac[r, idx] * phi[idx]
            derivs[r] = 2.0 * float(np.imag(np.vdot(mu, pphi)))
            a = angles[r]
            c, s = np.cos(a), np.sin(a)
            phi = c * phi + 1j * s * pphi
            mu = c * mu + 1j * s * (cc.fac[r, idx] * mu[idx])
        else:
            bit = (basis >> cc.controls[g]) & 1
            perm = basis ^ (bit << cc.targets[g])
            phi = phi[perm]
            mu = mu[perm]
    return energy, derivs


# ---------------------------------------------------------------------------
# numba kernels (same arithmetic, loop form)
# ---------------------------------------------------------------------------

if _USE_NUMBA:

    @numba.njit(cache=True)
    def _nb_apply(v, kinds, rot_rows, controls, targets, x_masks, fac, angles, invert):
        d = v.shape[0]
        tmp = np.empty_like(v)
        ng = kinds.shape[0]
        for step in range(ng):
            g = ng - 1 - step if invert else step
            if kinds[g] == 0:
                r = rot_rows[g]
                a = -angles[r] if invert else angles[r]
                c = np.cos(a)
                s = np.sin(a)
                x = x_masks[r]
                for i in range(d):
                    j = i ^ x
                    tmp[i] = c * v[i] - 1j * s * (fac[r, j] * v[j])
                v[:] = tmp
            else:
                cbit = controls[g]
                t = targets[g]
                for i in range(d):
                    j = i ^ (((i >> cbit) & 1) << t)
                    tmp[i] = v[j]
                v[:] = tmp
        return v

    @numba.njit(cache=True)
    def _nb_ham_apply(v, h_x, h_fac):
        d = v.shape[0]
        out = np.zeros_like(v)
        for t in range(h_x.shape[0]):
            x = h_x[t]
            for i in range(d):
                j = i ^ x
                out[i] += h_fac[t, j] * v[j]
        return out

    @numba.njit(cache=True)
    def _nb_adjoint(v0, kinds, rot_rows, controls, targets, x_masks, fac, h_x, h_fac, angles):
        d = v0.shape[0]
        phi = v0.copy()
        phi = _nb_apply(phi, kinds, rot_rows, controls, targets, x_masks, fac, angles, False)
        mu = _nb_ham_apply(phi, h_x, h_fac)
        acc = 0.0
        for i in range(d):
            acc += (np.conj(phi[i]) * mu[i]).real
        energy = acc
        nrot = x_masks.shape[0]
        derivs = np.zeros(nrot)
        tmp = np.empty_like(phi)
        ng = kinds.shape[0]
        for step in range(ng):
            g = ng - 1 - step
            if kinds[g] == 0:
                r = rot_rows[g]
                x = x_masks[r]
                im = 0.0
                for i in range(d):
                    j = i ^ x
                    im += (np.conj(mu[i]) * (fac[r, j] * phi[j])).imag
                derivs[r] = 2.0 * im
                a = angles[r]
                c = np.cos(a)
                s = np.sin(a)
                for i in range(d):
                    j = i ^ x
                    tmp[i] = c * phi[i] + 1j * s * (fac[r, j] * phi[j])
                phi[:] = tmp
                for i in range(d):
                    j = i ^ x
                    tmp[i] = c * mu[i] + 1j * s * (fac[r, j] * mu[j])
                mu[:] = tmp
            else:
                cbit = controls[g]
                t = targets[g]
                for i in range(d):
                    j = i ^ (((i >> cbit) & 1) << t)
                    tmp[i] = phi[j]
                phi[:] = tmp
                for i in range(d):
                    j = i ^ (((i >> cbit) & 1) << t)
                    tmp[i] = mu[j]
                mu[:] = tmp
        return energy, derivs


# ---------------------------------------------------------------------------
# public evaluation entry points (per-occurrence angles)
# ---------------------------------------------------------------------------

def run_state(cc: CompiledCircuit, angles, input_amps=None) -> np.ndarray:
    v = np.zeros(cc.dim, dtype=complex) if input_amps is None else np.asarray(input_amps, dtype=complex).copy()
    if input_amps is None:
        v[0] = 1.0
    angles = np.asarray(angles, dtype=float)
    if _USE_NUMBA:
        return _nb_apply(
            v, cc.kinds, cc.rot_rows, cc.controls, cc.targets, cc.x_masks, cc.fac, angles, False
        )
    return _np_apply(v, cc, angles)


def energy_value(cc: CompiledCircuit, ch: CompiledHamiltonian, angles, input_amps=None) -> float:
    v = run_state(cc, angles, input_amps)
    if _USE_NUMBA:
        hv = _nb_ham_apply(v, ch.x_masks, ch.fac)
    else:
        hv = _np_ham_apply(v, ch)
    return float(np.real(np.vdot(v, hv)))


def adjoint_derivatives(cc: CompiledCircuit, ch: CompiledHamiltonian, angles, input_amps=None):
    """Energy and d<H>/d(angle) per rotation occurrence, in one reverse sweep."""
    v0 = np.zeros(cc.dim, dtype=complex) if input_amps is None else np.asarray(input_amps, dtype=complex).copy()
    if input_amps is None:
        v0[0] = 1.0
    angles = np.asarray(angles, dtype=float)
    if _USE_NUMBA:
        return _nb_adjoint(
            v0, cc.kinds, cc.rot_rows, cc.controls, cc.targets, cc.x_masks, cc.fac,
            ch.x_masks, ch.fac, angles,
        )
    return _np_adjoint(v0, cc, ch, angles)


def shift_rule_derivatives(cc: CompiledCircuit, ch: CompiledHamiltonian, angles, input_amps=None):
    """Per-occurrence derivatives via f(a + pi/4) - f(a - pi/4)."""
    angles = np.asarray(angles, dtype=float)
    out = np.zeros(cc.num_rotations)
    for r in range(cc.num_rotations):
        plus = angles.copy()
        plus[r] += np.pi / 4
        minus = angles.copy()
        minus[r] -= np.pi / 4
        out[r] = energy_value(cc, ch, plus, input_amps) - energy_value(cc, ch, minus, input_amps)
    return out
