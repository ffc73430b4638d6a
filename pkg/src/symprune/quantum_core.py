"""Dense statevector core: Pauli-string algebra, gate application, exact diagonalization.

Conventions used throughout the package:

* Qubit 0 is the least-significant bit of a basis-state integer label, so the
  basis state ``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_j << j)``.
* Pauli strings are stored in symplectic form: an ``x_mask`` and a ``z_mask``
  over the qubits, plus a phase in {+1, +i, -1, -i}.  Qubit ``j`` carries an X
  iff bit ``j`` of ``x_mask`` is set, a Z iff bit ``j`` of ``z_mask`` is set,
  and a Y iff both are set.  The stored operator is ``phase * (tensor of
  I/X/Y/Z letters)``.
* Rotations are ``exp(-i * theta * P)`` with no 1/2 in the exponent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _popcount(values):
    """Bit-count of a python int or an integer ndarray."""
    if isinstance(values, (int, np.integer)):
        return int(values).bit_count()
    values = np.asarray(values)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values)
    out = np.zeros_like(values)
    work = values.copy()
    while np.any(work):
        out += work & 1
        work >>= 1
    return out


@dataclass(frozen=True)
class PauliString:
    """A tensor product of Pauli letters with an overall phase i**phase_exp."""

    num_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase_exp: int = 0  # operator = i**phase_exp * (letter tensor product)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        full = (1 << self.num_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask touches qubits outside the register")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls(num_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a letter string; character j acts on qubit j."""
        x = z = 0
        for j, ch in enumerate(label.upper()):
            if ch == "I":
                continue
            if ch in ("X", "Y"):
                x |= 1 << j
            if ch in ("Z", "Y"):
                z |= 1 << j
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(label), x, z)

    @classmethod
    def single(cls, num_qubits: int, qubit: int, letter: str) -> "PauliString":
        ops = ["I"] * num_qubits
        ops[qubit] = letter
        return cls.from_label("".join(ops))

    # -- views ---------------------------------------------------------

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def support(self) -> tuple:
        m = self.x_mask | self.z_mask
        return tuple(j for j in range(self.num_qubits) if (m >> j) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    def label(self) -> str:
        out = []
        for j in range(self.num_qubits):
            x = (self.x_mask >> j) & 1
            z = (self.z_mask >> j) & 1
            out.append("IXZY"[x + 2 * z])
        return "".join(out)

    def commutes_with(self, other: "PauliString") -> bool:
        """Exact symplectic commutation test."""
        a = _popcount(self.x_mask & other.z_mask)
        b = _popcount(self.z_mask & other.x_mask)
        return (a + b) % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.num_qubits != other.num_qubits:
            raise ValueError("qubit-count mismatch")
        x3 = self.x_mask ^ other.x_mask
        z3 = self.z_mask ^ other.z_mask
        # Convert each letter product to X^x Z^z form, multiply, convert back.
        # letter(P) = i^{|x&z|} X^x Z^z, and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1.
        e = (
            self.phase_exp
            + other.phase_exp
            + _popcount(self.x_mask & self.z_mask)
            + _popcount(other.x_mask & other.z_mask)
            - _popcount(x3 & z3)
            + 2 * _popcount(self.z_mask & other.x_mask)
        )
        return PauliString(self.num_qubits, x3, z3, e % 4)

    def embed(self, num_qubits: int) -> "PauliString":
        """The same string viewed on a larger register (identity on new qubits)."""
        if num_qubits < self.num_qubits:
            raise ValueError("cannot shrink a Pauli string")
        return PauliString(num_qubits, self.x_mask, self.z_mask, self.phase_exp)

    # -- dense action ---------------------------------------------------

    def action_tables(self):
        """(index, factor) arrays with P|b> = factor[b] |index[b]>."""
        d = 1 << self.num_qubits
        basis = np.arange(d)
        idx = basis ^ self.x_mask
        fac = np.where(_popcount(basis & self.z_mask) & 1, -1.0, 1.0).astype(complex)
        fac *= self.phase * (1j) ** int(_popcount(self.x_mask & self.z_mask))
        return idx, fac

    def to_dense(self) -> np.ndarray:
        d = 1 << self.num_qubits
        idx, fac = self.action_tables()
        m = np.zeros((d, d), dtype=complex)
        m[idx, np.arange(d)] = fac
        return m


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Hermitian Pauli strings (a Hamiltonian)."""

    num_qubits: int
    terms: tuple  # tuple of (coefficient: float, string: PauliString)

    @classmethod
    def from_terms(cls, num_qubits: int, terms) -> "PauliSum":
        """Deduplicate by (x_mask, z_mask); fold +/-1 phases into coefficients."""
        acc: dict = {}
        for coeff, p in terms:
            if p.num_qubits != num_qubits:
                raise ValueError("term qubit count mismatch")
            if not p.is_hermitian:
                raise ValueError(f"non-Hermitian term {p.label()} (phase {p.phase})")
            c = float(coeff) * (1.0 if p.phase_exp == 0 else -1.0)
            key = (p.x_mask, p.z_mask)
            acc[key] = acc.get(key, 0.0) + c
        cleaned = tuple(
            (c, PauliString(num_qubits, x, z))
            for (x, z), c in acc.items()
            if c != 0.0
        )
        return cls(num_qubits, cleaned)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    def strings(self) -> tuple:
        return tuple(p for _, p in self.terms)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.num_qubits, tuple((factor * c, p) for c, p in self.terms))

    def to_dense(self) -> np.ndarray:
        d = 1 << self.num_qubits
        m = np.zeros((d, d), dtype=complex)
        cols = np.arange(d)
        for c, p in self.terms:
            idx, fac = p.action_tables()
            m[idx, cols] += c * fac
        return m

    def apply(self, state: "StateVector") -> "StateVector":
        out = np.zeros_like(state.amplitudes)
        for c, p in self.terms:
            idx, fac = p.action_tables()
            tmp = np.empty_like(state.amplitudes)
            tmp[idx] = fac * state.amplitudes
            out += c * tmp
        return StateVector(state.num_qubits, out)


@dataclass
class StateVector:
    """Dense complex amplitudes over 2**num_qubits basis states."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError("amplitude length must be 2**num_qubits")

    @classmethod
    def zero_state(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis_state(cls, num_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def random_state(cls, num_qubits: int, seed) -> "StateVector":
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
        return cls(num_qubits, amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


# ---------------------------------------------------------------------------
# gate application (pure: inputs are never mutated)
# ---------------------------------------------------------------------------

def apply_pauli_string(state: StateVector, p: PauliString) -> StateVector:
    """Return P|psi>."""
    if p.num_qubits != state.num_qubits:
        raise ValueError("qubit-count mismatch")
    idx, fac = p.action_tables()
    out = np.empty_like(state.amplitudes)
    out[idx] = fac * state.amplitudes
    return StateVector(state.num_qubits, out)


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """Return exp(-i*theta*P)|psi> = cos(theta)|psi> - i*sin(theta) P|psi>.

    Valid because P**2 = I for a Hermitian phase-free Pauli string.
    """
    if p.phase_exp != 0:
        raise ValueError("rotation generator must be Hermitian with phase +1")
    rotated = apply_pauli_string(state, p)
    amps = np.cos(theta) * state.amplitudes - 1j * np.sin(theta) * rotated.amplitudes
    return StateVector(state.num_qubits, amps)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise ValueError("control and target must differ")
    n = state.num_qubits
    if not (0 <= control < n and 0 <= target < n):
        raise ValueError("qubit index out of range")
    basis = np.arange(1 << n)
    perm = np.where((basis >> control) & 1 == 1, basis ^ (1 << target), basis)
    return StateVector(n, state.amplitudes[perm])


def expectation(state: StateVector, h: PauliSum) -> float:
    """<psi|H|psi> with a hermiticity guard on the imaginary residue."""
    if h.num_qubits != state.num_qubits:
        raise ValueError("dimension mismatch")
    val = complex(np.vdot(state.amplitudes, h.apply(state).amplitudes))
    if abs(val.imag) > 1e-8:
        raise ValueError(f"imaginary expectation {val.imag:.3e}: input not Hermitian?")
    return float(val.real)


# ---------------------------------------------------------------------------
# dense Hermitian eigensolver: Householder tridiagonalization + implicit QL
# ---------------------------------------------------------------------------

def _householder_tridiagonalize(a: np.ndarray):
    """Reduce Hermitian a to real symmetric tridiagonal form.

    Returns (diag, offdiag, reflectors, phases) where reflectors is the list of
    Householder vectors (applied left-to-right recreates the similarity
    transform) and phases is the diagonal unitary that makes the off-diagonal
    real nonnegative.
    """
    a = np.array(a, dtype=complex)
    d = a.shape[0]
    reflectors = []
    for k in range(d - 2):
        x = a[k + 1 :, k].copy()
        nx = np.linalg.norm(x)
        if nx < 1e-300:
            reflectors.append(None)
            continue
        alpha = -np.exp(1j * np.angle(x[0])) * nx
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv < 1e-300:
            reflectors.append(None)
            continue
        v /= nv
        # A <- H A H with H = I - 2 v v^dag on the trailing block; with
        # w = A v and w2 = w - (v^dag w) v this is A - 2 v w2^dag - 2 w2 v^dag
        sub = a[k + 1 :, k + 1 :]
        w = sub @ v
        w2 = w - (v.conj() @ w) * v
        sub -= 2.0 * np.outer(v, w2.conj())
        sub -= 2.0 * np.outer(w2, v.conj())
        a[k + 1 :, k + 1 :] = sub
        a[k + 1 :, k] = 0.0
        a[k, k + 1 :] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = np.conj(alpha)
        reflectors.append(v)
    diag = np.real(np.diag(a)).copy()
    off = np.diag(a, -1).copy()
    # rotate phases so the off-diagonal becomes real nonnegative
    phases = np.ones(d, dtype=complex)
    real_off = np.zeros(d - 1, dtype=float)
    for k in range(d - 1):
        b = off[k] * np.conj(phases[k])
        if abs(b) < 1e-300:
            phases[k + 1] = phases[k]
            real_off[k] = 0.0
        else:
            phases[k + 1] = abs(b) / b
            real_off[k] = abs(b)
    return diag, real_off, reflectors, phases


def _tridiagonal_eigenvalues(diag, off, max_sweeps=50):
    """All eigenvalues of a real symmetric tridiagonal matrix (implicit QL)."""
    d = diag.copy().astype(float)
    e = np.zeros_like(d)
    e[: len(off)] = off
    n = len(d)
    for l in range(n):
        for _ in range(max_sweeps):
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            # Wilkinson-style implicit shift
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = c = 1.0
            p = 0.0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
        else:
            raise RuntimeError("implicit QL failed to converge")
    return np.sort(d)


def _solve_tridiagonal(diag, off, shift, rhs):
    """Solve (T - shift I) x = rhs with partial pivoting (T tridiagonal)."""
    n = len(diag)
    a = np.zeros(n)  # subdiagonal of working rows
    b = diag - shift  # diagonal
    c = np.zeros(n)  # superdiagonal
    c2 = np.zeros(n)  # second superdiagonal (fill-in from pivoting)
    a[1:] = off
    c[: n - 1] = off
    x = rhs.astype(float).copy()
    for i in range(n - 1):
        if abs(a[i + 1]) > abs(b[i]):
            # swap rows i and i+1
            b[i], a[i + 1] = a[i + 1], b[i]
            c[i], b[i + 1] = b[i + 1], c[i]
            c2[i], c[i + 1] = c[i + 1], c2[i]
            x[i], x[i + 1] = x[i + 1], x[i]
        if b[i] == 0.0:
            b[i] = 1e-300
        f = a[i + 1] / b[i]
        b[i + 1] -= f * c[i]
        c[i + 1] -= f * c2[i]
        x[i + 1] -= f * x[i]
    if b[n - 1] == 0.0:
        b[n - 1] = 1e-300
    x[n - 1] /= b[n - 1]
    if n >= 2:
        x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - c[i] * x[i + 1] - c2[i] * x[i + 2]) / b[i]
    return x


def eigh_dense(a: np.ndarray):
    """Eigenvalues (sorted) and the ground eigenvector of a Hermitian matrix.

    Returns (eigenvalues, ground_vector).  Built from scratch: Householder
    reduction to tridiagonal form, implicit-QL for the spectrum, inverse
    iteration plus back-transform for the minimal eigenvector.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if d == 1:
        return np.array([a[0, 0].real]), np.array([1.0 + 0j])
    herm_err = np.max(np.abs(a - a.conj().T))
    if herm_err > 1e-9 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not Hermitian")
    diag, off, reflectors, phases = _householder_tridiagonalize(a)
    evals = _tridiagonal_eigenvalues(diag, off)
    lam = evals[0]
    scale = max(np.max(np.abs(diag)), np.max(np.abs(off)) if len(off) else 0.0, 1.0)

    def _t_residual(x):
        r = (diag - lam) * x
        if len(off):
            r[:-1] += off * x[1:]
            r[1:] += off * x[:-1]
        return float(np.linalg.norm(r))

    best = None
    for attempt, pert in enumerate((1e-12, 1e-10, 1e-8)):
        # inverse iteration on the real tridiagonal, slightly shifted off lam
        rng = np.random.default_rng(11 + attempt)
        x = rng.normal(size=d)
        x /= np.linalg.norm(x)
        for _ in range(4):
            x = _solve_tridiagonal(diag, off, lam + pert * scale, x)
            x /= np.linalg.norm(x)
        resid = _t_residual(x)
        if best is None or resid < best[0]:
            best = (resid, x)
        if resid < 1e-10 * scale:
            break
    vec = (phases.conj() * best[1]).astype(complex)
    # undo the Householder reflectors in reverse order
    for k in range(d - 3, -1, -1):
        v = reflectors[k]
        if v is None:
            continue
        tail = vec[k + 1 :]
        tail -= 2.0 * v * (v.conj() @ tail)
    vec /= np.linalg.norm(vec)
    return evals, vec


def exact_ground(h: PauliSum):
    """Minimum eigenvalue and a unit ground eigenvector of H.

    Dense diagonalization, budgeted at num_qubits <= 12.
    """
    if h.num_qubits > 12:
        raise ValueError("dense diagonalization budget is 12 qubits")
    evals, vec = eigh_dense(h.to_dense())
    return float(evals[0]), StateVector(h.num_qubits, vec)


def power_iteration_ground(h: PauliSum, tol: float = 1e-12, max_iters: int = 200000, seed=3):
    """Independent ground-energy oracle: power iteration on (sigma*I - H).

    sigma is a Gershgorin-style upper bound on the spectrum, so the dominant
    eigenvector of the shifted matrix is the ground state of H.
    """
    sigma = float(np.sum(np.abs(h.coefficients()))) + 1.0
    m = sigma * np.eye(1 << h.num_qubits) - h.to_dense()
    rng = np.random.default_rng(seed)
    v = rng.normal(size=m.shape[0]) + 1j * rng.normal(size=m.shape[0])
    v /= np.linalg.norm(v)
    last = None
    streak = 0
    for _ in range(max_iters):
        v = m @ v
        v /= np.linalg.norm(v)
        ray = float(np.real(np.vdot(v, m @ v)))
        if last is not None and abs(ray - last) < tol:
            streak += 1
            if streak >= 5:
                break
        else:
            streak = 0
        last = ray
    energy = sigma - last
    return float(energy), StateVector(h.num_qubits, v)
