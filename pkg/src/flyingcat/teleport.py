"""Controlled teleportation of a two-qubit state through the tetrahedron state.

Register layout: Alice's message qubits A1, A2 are indices 0, 1; tetrahedron
qubits 1..6 are indices 2..7.  Alice holds tetrahedron qubits 1, 2, Bob holds
3, 4 and Charlie holds 5, 6.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from flyingcat.netstates import TETRA
from flyingcat.qcore import (
    BELL,
    BELL_LABELS,
    TOL,
    ContractError,
    X,
    Z,
    bell_amplitudes,
    haar_states,
    operator,
    partial_trace,
)

#: Bob's correction on his qubit for Alice's Bell outcome (X applied before Z).
BOB_CORRECTION = {"Phi+": np.eye(2), "Psi+": X, "Phi-": Z, "Psi-": Z @ X}

#: Correction on Bob's pair keyed by Charlie's (Z bit on qubit 5, X sign on qubit 6).
CHARLIE_CORRECTION = {
    (0, 1): np.eye(4),
    (0, -1): np.kron(Z, Z),
    (1, 1): np.kron(X, X),
    (1, -1): np.kron(Z @ X, Z @ X),
}

_ZKET = {0: np.array([1, 0], dtype=complex), 1: np.array([0, 1], dtype=complex)}
_XKET = {1: np.array([1, 1], dtype=complex) / math.sqrt(2),
         -1: np.array([1, -1], dtype=complex) / math.sqrt(2)}


@dataclass(frozen=True)
class TwoQubitMessage:
    """Bell-basis coefficients of a|Phi+> + b|Psi+> + c|Psi-> + d|Phi->."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        norm = sum(abs(complex(v)) ** 2 for v in (self.a, self.b, self.c, self.d))
        if abs(norm - 1) > TOL:
            raise ContractError(f"message norm^2 is {norm}, not 1")

    def state(self):
        return (self.a * BELL["Phi+"] + self.b * BELL["Psi+"]
                + self.c * BELL["Psi-"] + self.d * BELL["Phi-"])

    @classmethod
    def from_state(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        return cls(*(complex(np.vdot(BELL[k], psi)) for k in ("Phi+", "Psi+", "Psi-", "Phi-")))

    @classmethod
    def haar(cls, rng):
        return cls.from_state(haar_states(2, 1, rng)[0])


@dataclass
class TeleportOutcome:
    alice: tuple
    charlie: tuple
    bob_state: np.ndarray
    fidelity: float


def _alice_branch(phi, l1, l2):
    """Bob+Charlie state (qubits 3..6) after Alice's outcomes and Bob's corrections, unnormalized."""
    psi = np.kron(phi, TETRA)
    rest = bell_amplitudes(psi, (0, 2))[l1]          # A2, 2, 3, 4, 5, 6
    rest = bell_amplitudes(rest, (0, 1))[l2]         # 3, 4, 5, 6
    corr = operator(4, {0: BOB_CORRECTION[l1], 1: BOB_CORRECTION[l2]})
    return corr @ rest


def charlie_branch(bc, zbit, xsign):
    """Bob's pair after Charlie's outcome and the conditional correction, unnormalized."""
    t = bc.reshape(4, 2, 2)
    rem = np.einsum("bcd,c,d->b", t, _ZKET[zbit].conj(), _XKET[xsign].conj())
    return CHARLIE_CORRECTION[(zbit, xsign)] @ rem


def _sample(rng, weights):
    w = np.asarray(weights, dtype=float)
    return int(rng.choice(len(w), p=w / w.sum()))


def run_teleport(msg, cooperate, rng):
    """Teleport ``msg`` from Alice to Bob through |T>.

    Alice's Bell outcomes are drawn with their Born probabilities.  With
    cooperation Charlie measures qubit 5 in Z and qubit 6 in X and Bob applies
    the matching correction; without it Bob's state is the partial trace over
    Charlie's qubits.
    """
    phi = msg.state()
    pairs = list(itertools.product(BELL_LABELS, BELL_LABELS))
    branches = [_alice_branch(phi, l1, l2) for l1, l2 in pairs]
    k = _sample(rng, [np.vdot(v, v).real for v in branches])
    bc = branches[k] / np.linalg.norm(branches[k])
    if cooperate:
        keys = list(CHARLIE_CORRECTION)
        outs = [charlie_branch(bc, *key) for key in keys]
        j = _sample(rng, [np.vdot(v, v).real for v in outs])
        bob = outs[j] / np.linalg.norm(outs[j])
        rho = np.outer(bob, bob.conj())
        charlie = keys[j]
    else:
        rho = partial_trace(np.outer(bc, bc.conj()), [0, 1])
        charlie = None
    f = float(np.vdot(phi, rho @ phi).real)
    return TeleportOutcome(pairs[k], charlie, rho, min(max(f, 0.0), 1.0))


def branch_maps():
    """Linear maps message -> Bob/Charlie state for all 16 Alice outcomes, shape (16, 16, 4)."""
    basis = np.eye(4, dtype=complex)
    maps = []
    for l1, l2 in itertools.product(BELL_LABELS, BELL_LABELS):
        maps.append(np.stack([_alice_branch(basis[i], l1, l2) for i in range(4)], axis=1))
    return np.array(maps)


def average_fidelity(samples, rng, chunk=20_000):
    """Haar-averaged fidelity without Charlie's cooperation.

    Each sampled message is scored by the Born-weighted average over Alice's
    16 outcomes of <phi|rho_B|phi>.  Returns ``(Fbar, stderr)``; the control
    power is ``1 - Fbar``.
    """
    if samples < 10_000:
        raise ContractError("average_fidelity needs at least 10^4 samples")
    K = branch_maps().reshape(16, 4, 4, 4)       # branch, bob, charlie, message
    total, total2 = 0.0, 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        phis = haar_states(2, m, rng)
        v = np.einsum("kbcj,sj->skbc", K, phis)
        amp = np.einsum("sb,skbc->skc", phis.conj(), v)
        f = (np.abs(amp) ** 2).sum(axis=(1, 2))
        total += f.sum()
        total2 += (f ** 2).sum()
        done += m
    mean = total / samples
    return mean, math.sqrt(max(total2 / samples - mean ** 2, 0.0) / samples)


def control_power(fbar):
    return 1.0 - fbar


def cooperative_fidelities(msg):
    """Fidelity on every (Alice, Alice, Charlie) branch with cooperation; 64 values."""
    phi = msg.state()
    out = []
    for l1, l2 in itertools.product(BELL_LABELS, BELL_LABELS):
        bc = _alice_branch(phi, l1, l2)
        bc = bc / np.linalg.norm(bc)
        for key in CHARLIE_CORRECTION:
            bob = charlie_branch(bc, *key)
            bob = bob / np.linalg.norm(bob)
            out.append(abs(np.vdot(phi, bob)) ** 2)
    return np.array(out)
