"""Loss evaluation, gradients, optimizers, and convergence metrics.

The objective is the squared energy residual

    L(theta) = 1/2 * (<psi(theta)|H|psi(theta)> - C)^2,

where the target constant C defaults to the exact ground energy E0.  The
residual eps = <H> - C and the loss/gradient reported in traces always refer
to the user's C.  The *optimizer update*, however, always descends the
ground-referenced objective (factor <H> - E0): with any admissible C <= E0 the
two objectives share every stationary point, and tying the update to E0 makes
parameter trajectories independent of which constant is being reported.
`gradient` exposes the literal C-referenced gradient eps * dE for callers that
want it.

Energy derivatives come from the parameter-shift rule with shift pi/4 and unit
divisor, exact for involutory generators under the e^{-i*theta*P} convention:
dE/dtheta = E(theta + pi/4) - E(theta - pi/4).  An adjoint (reverse-sweep)
evaluator computes the same numbers in a single pass and is the default inside
the training loop; shift and adjoint values are pinned against each other in
the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _engine
from .ansatz import AnsatzDesign
from .quantum_core import PauliSum, exact_ground


@lru_cache(maxsize=64)
def _compiled_circuit(a: AnsatzDesign) -> _engine.CompiledCircuit:
    return _engine.CompiledCircuit(a)


@lru_cache(maxsize=64)
def _compiled_hamiltonian(h: PauliSum) -> _engine.CompiledHamiltonian:
    return _engine.CompiledHamiltonian(h)


@dataclass(frozen=True)
class LossSpec:
    """Hamiltonian plus the constant subtracted inside the squared loss.

    target_constant must not exceed the ground energy (the residual would
    otherwise change sign along the way and the loss would no longer witness
    convergence to the ground state).  Leaving it as None selects E0.
    """

    hamiltonian: PauliSum
    target_constant: float | None = None
    ground_energy: float = field(init=False)

    def __post_init__(self):
        e0, _ = exact_ground(self.hamiltonian)
        object.__setattr__(self, "ground_energy", e0)
        if self.target_constant is None:
            object.__setattr__(self, "target_constant", e0)
        if self.target_constant > e0 + 1e-9:
            raise ValueError(
                f"target constant {self.target_constant} exceeds ground energy {e0}"
            )


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_adam: float = 1e-8
    max_iters: int = 10000
    loss_stop: float = 1e-8
    plateau_delta: float = 1e-8
    plateau_count: int = 3

    def __post_init__(self):
        if self.kind not in ("gradient_descent", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        # rate 0 is admitted deliberately: it exercises the plateau stop.
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.max_iters < 0 or self.plateau_count < 1:
            raise ValueError("bad iteration limits")


@dataclass
class TrainingTrace:
    """Per-iteration training record plus the final state of the run."""

    iterations: np.ndarray
    loss: np.ndarray
    residual: np.ndarray
    grad_norm: np.ndarray
    qntk: np.ndarray
    final_params: np.ndarray
    stop_reason: str
    wall_time: float

    def __post_init__(self):
        self.iterations = np.asarray(self.iterations, dtype=int)
        if len(self.iterations) == 0:
            raise ValueError("empty trace")
        if np.any(np.diff(self.iterations) <= 0):
            raise ValueError("iterations must be strictly increasing")
        if np.any(np.asarray(self.loss) < 0):
            raise ValueError("loss must be nonnegative")
        if self.stop_reason not in ("loss_threshold", "plateau", "max_iters", "loaded"):
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")

    @property
    def num_records(self) -> int:
        return len(self.iterations)


def energy_expectation(a: AnsatzDesign, params, h: PauliSum) -> float:
    cc = _compiled_circuit(a)
    return _engine.energy_value(cc, _compiled_hamiltonian(h), cc.expand_params(params))


def energy_gradient(a: AnsatzDesign, params, h: PauliSum, method: str = "adjoint"):
    """Energy and its slot-aggregated derivative vector.

    method="shift" evaluates 2 * (rotation count) shifted circuits;
    method="adjoint" produces the same values in one reverse sweep.
    """
    cc = _compiled_circuit(a)
    ch = _compiled_hamiltonian(h)
    angles = cc.expand_params(params)
    if method == "adjoint":
        energy, per_gate = _engine.adjoint_derivatives(cc, ch, angles)
    elif method == "shift":
        energy = _engine.energy_value(cc, ch, angles)
        per_gate = _engine.shift_rule_derivatives(cc, ch, angles)
    else:
        raise ValueError(f"unknown gradient method {method!r}")
    return energy, cc.aggregate(per_gate)


def residual(a: AnsatzDesign, params, spec: LossSpec) -> float:
    return energy_expectation(a, params, spec.hamiltonian) - spec.target_constant


def loss(a: AnsatzDesign, params, spec: LossSpec) -> float:
    eps = residual(a, params, spec)
    return 0.5 * eps * eps


def gradient(a: AnsatzDesign, params, spec: LossSpec, method: str = "shift") -> np.ndarray:
    """Gradient of the C-referenced loss: (E - C) * dE/dtheta."""
    energy, de = energy_gradient(a, params, spec.hamiltonian, method=method)
    return (energy - spec.target_constant) * de


def train(a: AnsatzDesign, spec: LossSpec, opt: OptimizerConfig, init) -> TrainingTrace:
    """Run the optimizer until a stopping rule fires.

    Stopping rules, checked on the recorded loss in this order:
      1. loss <= opt.loss_stop                       -> "loss_threshold"
      2. |loss_t - loss_{t-1}| < opt.plateau_delta
         on plateau_count consecutive iterations     -> "plateau"
      3. t == opt.max_iters                          -> "max_iters"

    The iterate at t = 0 is recorded before any update, so a run started at a
    minimum stops immediately.  Every iteration also records the residual, the
    C-referenced gradient norm, and the kernel value |dE|^2 (all byproducts of
    the same adjoint sweep).
    """
    t_start = time.perf_counter()
    cc = _compiled_circuit(a)
    ch = _compiled_hamiltonian(spec.hamiltonian)
    params = np.asarray(init, dtype=float).copy()
    if params.shape != (a.num_free_params,):
        raise ValueError("initial parameter count mismatch")

    its, losses, epss, gnorms, kernels = [], [], [], [], []
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    plateau_streak = 0
    prev_loss = None
    stop_reason = "max_iters"

    for t in range(opt.max_iters + 1):
        energy, per_gate = _engine.adjoint_derivatives(cc, ch, cc.expand_params(params))
        de = cc.aggregate(per_gate)
        eps_c = energy - spec.target_constant
        loss_c = 0.5 * eps_c * eps_c
        if not math.isfinite(loss_c):
            raise RuntimeError(
                f"training diverged: non-finite loss at iteration {t} (energy={energy})"
            )
        its.append(t)
        losses.append(loss_c)
        epss.append(eps_c)
        gnorms.append(abs(eps_c) * float(np.linalg.norm(de)))
        kernels.append(float(de @ de))

        if loss_c <= opt.loss_stop:
            stop_reason = "loss_threshold"
            break
        if prev_loss is not None and abs(loss_c - prev_loss) < opt.plateau_delta:
            plateau_streak += 1
            if plateau_streak >= opt.plateau_count:
                stop_reason = "plateau"
                break
        else:
            plateau_streak = 0
        prev_loss = loss_c
        if t == opt.max_iters:
            stop_reason = "max_iters"
            break

        step_grad = (energy - spec.ground_energy) * de
        if opt.kind == "gradient_descent":
            params -= opt.learning_rate * step_grad
        else:
            m = opt.beta1 * m + (1.0 - opt.beta1) * step_grad
            v = opt.beta2 * v + (1.0 - opt.beta2) * step_grad * step_grad
            m_hat = m / (1.0 - opt.beta1 ** (t + 1))
            v_hat = v / (1.0 - opt.beta2 ** (t + 1))
            params -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.epsilon_adam)

    return TrainingTrace(
        iterations=np.asarray(its),
        loss=np.asarray(losses),
        residual=np.asarray(epss),
        grad_norm=np.asarray(gnorms),
        qntk=np.asarray(kernels),
        final_params=params,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - t_start,
    )


def steps_to_epsilon(trace: TrainingTrace, eps: float):
    """First recorded iteration with loss <= eps, or None if never reached."""
    hits = np.nonzero(trace.loss <= eps)[0]
    if len(hits) == 0:
        return None
    return int(trace.iterations[hits[0]])


def fit_decay_rate(trace: TrainingTrace):
    """Exponential decay rate of the residual: eps_t ~ e^{-gamma t}.

    Least-squares slope of log(eps) against t over the window where
    eps in [1e-10, 0.5 * eps_0], excluding the first 5% of iterations
    (transient).  Returns (gamma, r_squared); raises if fewer than 20
    usable points remain.
    """
    t = np.asarray(trace.iterations, dtype=float)
    eps = np.asarray(trace.residual, dtype=float)
    eps0 = eps[0]
    t_min = 0.05 * t[-1]
    mask = (t >= t_min) & (eps > 1e-10) & (eps <= 0.5 * eps0)
    if np.count_nonzero(mask) < 20:
        raise ValueError("insufficient decay window: fewer than 20 usable points")
    tw = t[mask]
    yw = np.log(eps[mask])
    slope, intercept = np.polyfit(tw, yw, 1)
    pred = slope * tw + intercept
    ss_res = float(np.sum((yw - pred) ** 2))
    ss_tot = float(np.sum((yw - np.mean(yw)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(-slope), float(r2)


def save_trace(trace: TrainingTrace, path) -> None:
    """Write one record per line: columns (t, loss, eps, grad_norm)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# t loss eps grad_norm\n")
        for t, lo, ep, gn in zip(trace.iterations, trace.loss, trace.residual, trace.grad_norm):
            fh.write(f"{int(t)} {float(lo)!r} {float(ep)!r} {float(gn)!r}\n")


def load_trace(path) -> TrainingTrace:
    its, losses, epss, gnorms = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split()
            if len(cols) != 4:
                raise ValueError(f"malformed trace line: {line!r}")
            its.append(int(cols[0]))
            losses.append(float(cols[1]))
            epss.append(float(cols[2]))
            gnorms.append(float(cols[3]))
    n = len(its)
    return TrainingTrace(
        iterations=np.asarray(its),
        loss=np.asarray(losses),
        residual=np.asarray(epss),
        grad_norm=np.asarray(gnorms),
        qntk=np.full(n, np.nan),
        final_params=np.zeros(0),
        stop_reason="loaded",
        wall_time=float("nan"),
    )
