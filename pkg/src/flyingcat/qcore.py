"""Dense state-vector and density-matrix algebra for small qubit registers.

States are plain numpy arrays: a pure state on ``n`` qubits is a complex
vector of length ``2**n``, a density matrix is a ``2**n x 2**n`` complex
array.  Qubits are numbered from 0 in code (qubit 1 of the usual labelling
is index 0) and qubit 0 is the most significant bit of the basis index.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_QUBITS = 8
TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

_S2 = 1 / np.sqrt(2)
#: Bell states on two qubits, in the order used for outcome labels.
BELL = {
    "Phi+": np.array([1, 0, 0, 1], dtype=complex) * _S2,
    "Psi+": np.array([0, 1, 1, 0], dtype=complex) * _S2,
    "Psi-": np.array([0, 1, -1, 0], dtype=complex) * _S2,
    "Phi-": np.array([1, 0, 0, -1], dtype=complex) * _S2,
}
BELL_LABELS = tuple(BELL)


class ContractError(ValueError):
    """An argument violates an operation's precondition."""


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("IZZ")``.

    ``phase`` is a power of i (0..3) so that products stay exact.
    """

    labels: str
    phase: int = 0

    def __post_init__(self):
        if not self.labels or set(self.labels) - set("IXYZ"):
            raise ContractError(f"bad Pauli labels {self.labels!r}")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def single(cls, n, qubits, kind):
        """``kind`` on each of ``qubits`` (0-based) of an n-qubit register."""
        lab = ["I"] * n
        for q in qubits:
            lab[q] = kind
        return cls("".join(lab))

    @classmethod
    def identity(cls, n):
        return cls("I" * n)

    def __len__(self):
        return len(self.labels)

    @property
    def weight(self):
        return sum(c != "I" for c in self.labels)

    @property
    def support(self):
        return tuple(i for i, c in enumerate(self.labels) if c != "I")

    def masks(self):
        """(xmask, zmask) bit masks; qubit 0 is the most significant bit."""
        n = len(self.labels)
        xm = zm = 0
        for q, c in enumerate(self.labels):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                xm |= bit
            if c in "ZY":
                zm |= bit
        return xm, zm

    def matrix(self):
        m = reduce(np.kron, (PAULI[c] for c in self.labels))
        return (1j ** self.phase) * m

    def __mul__(self, other):
        if len(self) != len(other):
            raise ContractError("Pauli length mismatch")
        table = {
            ("X", "Y"): ("Z", 1), ("Y", "X"): ("Z", 3),
            ("Y", "Z"): ("X", 1), ("Z", "Y"): ("X", 3),
            ("Z", "X"): ("Y", 1), ("X", "Z"): ("Y", 3),
        }
        phase = self.phase + other.phase
        out = []
        for a, b in zip(self.labels, other.labels):
            if a == "I":
                out.append(b)
            elif b == "I":
                out.append(a)
            elif a == b:
                out.append("I")
            else:
                c, ph = table[(a, b)]
                out.append(c)
                phase += ph
        return PauliString("".join(out), phase)

    def commutes(self, other):
        anti = sum(a != "I" and b != "I" and a != b
                   for a, b in zip(self.labels, other.labels))
        return anti % 2 == 0

    def __str__(self):
        prefix = ["", "i", "-", "-i"][self.phase]
        return prefix + self.labels


def num_qubits(dim):
    n = int(dim).bit_length() - 1
    if n < 1 or 1 << n != dim:
        raise ContractError(f"dimension {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise ContractError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    return n


def check_state(psi, tol=TOL):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ContractError("pure state must be a vector")
    num_qubits(psi.size)
    if abs(np.vdot(psi, psi).real - 1) > tol:
        raise ContractError("pure state is not normalized")
    return psi


def check_density(rho, tol=TOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ContractError("density matrix must be square")
    num_qubits(rho.shape[0])
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ContractError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise ContractError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ContractError("density matrix is not positive semidefinite")
    return rho


def is_density(rho, tol=TOL):
    try:
        check_density(rho, tol)
    except ContractError:
        return False
    return True


def ket(bits):
    """Computational basis state from a bit string such as ``"011"``."""
    v = np.zeros(1 << len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def product_state(*single):
    return reduce(np.kron, [np.asarray(s, dtype=complex) for s in single])


def dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def maximally_mixed(n):
    return np.eye(1 << n, dtype=complex) / (1 << n)


def _pauli_action(p, dim):
    xm, zm = p.masks()
    b = np.arange(dim)
    zpar = np.array([bin(v).count("1") & 1 for v in (b & zm)])
    ny = bin(xm & zm).count("1")
    phase = (1j ** (ny + p.phase)) * (1 - 2 * zpar)
    return b ^ xm, phase


def apply_pauli(state, p):
    """Apply Pauli string ``p`` to a pure state or conjugate a density matrix.

    Works on index permutations rather than building the 2^n matrix.
    """
    state = np.asarray(state, dtype=complex)
    dim = state.shape[0]
    if len(p) != num_qubits(dim):
        raise ContractError(f"Pauli of length {len(p)} on a {num_qubits(dim)}-qubit state")
    target, phase = _pauli_action(p, dim)
    if state.ndim == 1:
        out = np.empty_like(state)
        out[target] = phase * state
        return out
    out = np.empty_like(state)
    out[np.ix_(target, target)] = np.outer(phase, phase.conj()) * state
    return out


def operator(n, ops):
    """Full 2^n matrix from a mapping ``{qubit: 2x2 matrix}``."""
    return reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def apply_local(state, ops):
    """Apply single-qubit matrices ``{qubit: U}`` to a pure state or density matrix."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state.shape[0])
    if state.ndim == 1:
        t = state.reshape([2] * n)
        for q, u in ops.items():
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [q])), 0, q)
        return t.reshape(-1)
    u = operator(n, ops)
    return u @ state @ u.conj().T


def hadamard_all(state):
    n = num_qubits(np.asarray(state).shape[0])
    return apply_local(state, {q: H for q in range(n)})


def expectation(state, op_matrix):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.vdot(state, op_matrix @ state)
    return np.trace(op_matrix @ state)


def partial_trace(rho, keep):
    """Reduced density matrix on the qubits in ``keep`` (kept in ascending order)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = dm(rho)
    n = num_qubits(rho.shape[0])
    keep = sorted(keep)
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    perm = keep + drop + [n + q for q in keep] + [n + q for q in drop]
    t = t.transpose(perm)
    dk, dd = 1 << len(keep), 1 << len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def fidelity(rho, psi):
    """<psi|rho|psi>, clamped into [0, 1] when within round-off of the range."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.size, psi.size):
        raise ContractError("dimension mismatch between rho and psi")
    f = np.vdot(psi, rho @ psi).real
    if -TOL <= f < 0:
        f = 0.0
    elif 1 < f <= 1 + TOL:
        f = 1.0
    return float(f)


def _pair_view(psi, qubits):
    n = num_qubits(psi.size)
    i, j = qubits
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ContractError(f"invalid qubit pair {qubits} for {n} qubits")
    t = np.moveaxis(psi.reshape([2] * n), [i, j], [0, 1])
    return n, t.reshape(4, -1)


def bell_amplitudes(psi, qubits):
    """Unnormalized remainder states for each Bell outcome on ``qubits``.

    Returns ``{label: vector over the other n-2 qubits}`` (their order kept).
    """
    _, m = _pair_view(np.asarray(psi, dtype=complex), qubits)
    return {lab: vec.conj() @ m for lab, vec in BELL.items()}


def bell_probabilities(psi, qubits):
    return {lab: float(np.vdot(r, r).real) for lab, r in bell_amplitudes(psi, qubits).items()}


def bell_project(psi, qubits, label):
    """Post-measurement state with the pair left in Bell state ``label``.

    Returns ``(probability, normalized full-register state)``.
    """
    psi = np.asarray(psi, dtype=complex)
    n, _ = _pair_view(psi, qubits)
    rest = bell_amplitudes(psi, qubits)[label]
    p = float(np.vdot(rest, rest).real)
    if p <= 0:
        raise ContractError(f"Bell outcome {label} has zero probability")
    full = np.tensordot(BELL[label].reshape(2, 2), rest.reshape([2] * (n - 2)) / np.sqrt(p), axes=0)
    i, j = qubits
    full = np.moveaxis(full, [0, 1], [i, j])
    return p, full.reshape(-1)


def bell_measure(psi, qubits, rng):
    """Measure ``qubits`` in the Bell basis; returns ``(label, post-state)``."""
    psi = check_state(psi)
    probs = bell_probabilities(psi, qubits)
    labels = [lab for lab in BELL_LABELS if probs[lab] > 0]
    w = np.array([probs[lab] for lab in labels])
    label = labels[rng.choice(len(labels), p=w / w.sum())]
    return label, bell_project(psi, qubits, label)[1]


def haar_states(n, count, rng):
    """``count`` Haar-random n-qubit pure states, shape ``(count, 2**n)``."""
    v = rng.normal(size=(count, 1 << n)) + 1j * rng.normal(size=(count, 1 << n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def haar_two_qubit(rng):
    return haar_states(2, 1, rng)[0]


def parity_projector(n, qubits=None, kind="Z", sign=1):
    """Projector onto the ``sign`` eigenspace of the ``kind``-parity of ``qubits``."""
    qubits = range(n) if qubits is None else qubits
    p = PauliString.single(n, qubits, kind).matrix()
    return 0.5 * (np.eye(1 << n) + sign * p)
