"""GHZ and tetrahedron-state preparation with flying-cat checks, decoding, witness.

Qubits are 0-based in code; the tetrahedron's edge qubits 1..6 are indices
0..5, with nodes A = (0, 1), B = (2, 3), C = (4, 5).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from flyingcat.montecarlo import CheckSpec, apply_pauli_batch, run_trajectories
from flyingcat.paritycheck import ParityCheckConfig, check_blocks, thresholded_inference
from flyingcat.qcore import (
    BELL,
    ContractError,
    PauliString,
    apply_pauli,
    check_density,
    dm,
    fidelity,
    hadamard_all,
    ket,
    product_state,
)

PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)

# -- GHZ ---------------------------------------------------------------------

GHZ = (ket("000") + ket("111")) / math.sqrt(2)

# (Z1Z2, Z2Z3) outcome -> X correction
GHZ_CORRECTION = {
    (1, 1): PauliString("III"),
    (-1, 1): PauliString("XII"),
    (1, -1): PauliString("IIX"),
    (-1, -1): PauliString("IXI"),
}


def ghz_checks(alpha, eta12, eta23):
    """Z1Z2 and Z2Z3 weight-2 checks.

    Each check loses ``eta_ij`` between its two qubits and again on the way
    to the detector, which reproduces both the qubit-error probability and
    the (1 - eta_ij) alpha readout amplitude of the composite error model.
    """
    return [CheckSpec(ParityCheckConfig(alpha, (eta12, eta12)), (0, 1)),
            CheckSpec(ParityCheckConfig(alpha, (eta23, eta23)), (1, 2))]


def ghz_predicted_error(alpha, eta12, eta23):
    """Composite error probability of the GHZ protocol, as in the error model."""
    p12 = (1 - math.exp(-2 * eta12 * alpha ** 2)) / 2
    p23 = (1 - math.exp(-2 * eta23 * alpha ** 2)) / 2
    q12 = math.erfc(math.sqrt(2) * (1 - eta12) * alpha) / 2
    q23 = math.erfc(math.sqrt(2) * (1 - eta23) * alpha) / 2
    return p12 + p23 - p12 * p23 + q12 + q23 + q12 * q23


def _ghz_exact(checks):
    rho0 = dm(product_state(PLUS, PLUS, PLUS))
    out = np.zeros_like(rho0)
    first = thresholded_inference(check_blocks(rho0, checks[0].cfg, checks[0].qubits))
    for m1 in (1, -1):
        mid = first.branch(m1)
        second = thresholded_inference(check_blocks(mid, checks[1].cfg, checks[1].qubits))
        for m2 in (1, -1):
            out += apply_pauli(second.branch(m2), GHZ_CORRECTION[(m1, m2)])
    return out


def _ghz_correct(xs, states):
    syn = [np.where(x >= 0, 1, -1) for x in xs]
    out = np.empty_like(states)
    for key, corr in GHZ_CORRECTION.items():
        sel = (syn[0] == key[0]) & (syn[1] == key[1])
        if sel.any():
            out[sel] = apply_pauli_batch(states[sel], corr)
    return out


def prepare_ghz(alpha, eta12, eta23, mode="exact", seed=0, shot=0):
    """Prepare a GHZ state from |+++> with two lossy Z-parity checks.

    ``mode="exact"`` returns the averaged density matrix; ``mode="sampled"``
    returns the pure state of trajectory ``shot``.  The second return value
    is the composite error probability predicted by the analytic model.
    """
    if not alpha > 0:
        raise ContractError("alpha must be positive")
    checks = ghz_checks(alpha, eta12, eta23)
    p = ghz_predicted_error(alpha, eta12, eta23)
    if mode == "exact":
        return _ghz_exact(checks), p
    if mode == "sampled":
        psi0 = product_state(PLUS, PLUS, PLUS)
        res = run_trajectories(psi0, checks, seed, 1, lambda f, xs, st: (xs, st))
        return _ghz_correct(res[0], res[1])[0], p
    raise ContractError(f"unknown mode {mode!r}")


def ghz_fidelity(alpha, eta12, eta23, mode="exact", shots=100_000, seed=0, workers=1):
    """Fidelity with |GHZ> and its standard error (0 in exact mode)."""
    checks = ghz_checks(alpha, eta12, eta23)
    if mode == "exact":
        return fidelity(_ghz_exact(checks), GHZ), 0.0

    def reducer(fired, xs, states):
        f = np.abs(_ghz_correct(xs, states) @ GHZ.conj()) ** 2
        return np.array([f.sum(), (f ** 2).sum()])

    s1, s2 = run_trajectories(product_state(PLUS, PLUS, PLUS), checks, seed, shots, reducer, workers)
    mean = s1 / shots
    return mean, math.sqrt(max(s2 / shots - mean ** 2, 0.0) / shots)


# -- tetrahedron state -------------------------------------------------------

STABILIZERS = (
    PauliString("ZIZIZI"),  # S1 = Z1 Z3 Z5
    PauliString("ZIIZIZ"),  # S2 = Z1 Z4 Z6
    PauliString("IZIZZI"),  # S3 = Z2 Z4 Z5
    PauliString("XIXIIX"),  # S4 = X1 X3 X6
    PauliString("XIIXXI"),  # S5 = X1 X4 X5
    PauliString("IXXIXI"),  # S6 = X2 X3 X5
)
STABILIZER_QUBITS = tuple(p.support for p in STABILIZERS)

#: Syndrome table: row j lists (sigma_1..sigma_6) for a single error on qubit j.
#: Columns 1-3 flag an X error on j, columns 4-6 a Z error on j.
TABLE_II = (
    (-1, -1, +1, -1, -1, +1),
    (+1, +1, -1, +1, +1, -1),
    (-1, +1, +1, -1, +1, -1),
    (+1, -1, -1, +1, -1, +1),
    (-1, +1, -1, +1, -1, -1),
    (+1, -1, +1, -1, +1, +1),
)

#: Class II (all -1) correction pair; any of (1,2), (3,4), (5,6) works.
CLASS_II_PAIR = (0, 1)

#: Preparation order: the X-type round first, then the Z-type round.
CHECK_ORDER = (3, 4, 5, 0, 1, 2)


@dataclass(frozen=True)
class TetraSyndrome:
    sigma: tuple

    def __post_init__(self):
        if len(self.sigma) != 6 or any(s not in (1, -1) for s in self.sigma):
            raise ContractError(f"syndrome needs six +-1 entries, got {self.sigma}")
        object.__setattr__(self, "sigma", tuple(int(s) for s in self.sigma))


@dataclass
class WitnessEstimate:
    value: float
    fidelity: float
    stderr: float = 0.0


def tetra_target():
    """The tetrahedron state: (1/2) sum over Bell states of |b>_12 |b>_34 |b>_56."""
    t = np.zeros(64, dtype=complex)
    for b in BELL.values():
        t += product_state(b, b, b)
    return t / 2


TETRA = tetra_target()


def validate_table(table=None):
    """Check every syndrome-table row against explicit commutation with S1..S6."""
    table = TABLE_II if table is None else table
    for j, row in enumerate(table):
        for kind, cols in (("X", range(3)), ("Z", range(3, 6))):
            err = PauliString.single(6, [j], kind)
            for c in cols:
                expect = 1 if STABILIZERS[c].commutes(err) else -1
                if row[c] != expect:
                    raise ContractError(
                        f"syndrome table row {j + 1}, column {c + 1}: {row[c]} but {kind}{j + 1} gives {expect}")


def syndrome_of(state):
    """Stabilizer eigenvalues of a (code-space-up-to-Pauli) pure state."""
    vals = []
    for s in STABILIZERS:
        e = np.vdot(state, apply_pauli(state, s)).real
        vals.append(1 if e > 0 else -1)
    return TetraSyndrome(tuple(vals))


def tetra_decode(syndrome, kind):
    """Correction for X errors (from sigma_1..3) or Z errors (from sigma_4..6).

    ``syndrome`` is either a ``TetraSyndrome`` or the three relevant signs.
    """
    if kind not in ("X", "Z"):
        raise ContractError(f"error kind must be 'X' or 'Z', got {kind!r}")
    validate_table()
    sig = syndrome.sigma if isinstance(syndrome, TetraSyndrome) else tuple(syndrome)
    if len(sig) == 6:
        sig = sig[:3] if kind == "X" else sig[3:]
    sig = tuple(int(s) for s in sig)
    if sig == (1, 1, 1):
        return PauliString.identity(6)
    if sig == (-1, -1, -1):
        return PauliString.single(6, CLASS_II_PAIR, kind)
    cols = slice(0, 3) if kind == "X" else slice(3, 6)
    for j, row in enumerate(TABLE_II):
        if tuple(row[cols]) == sig:
            return PauliString.single(6, [j], kind)
    raise ContractError(f"syndrome {sig} matches no decoding case")


def tetra_correction(sigma):
    return tetra_decode(sigma[:3], "X") * tetra_decode(sigma[3:], "Z")


def tetra_configs(alpha, etas, x_etas=None):
    """Six check configs in stabilizer order S1..S6 (Z-type S1-S3, X-type S4-S6)."""
    x_etas = etas if x_etas is None else x_etas
    return [ParityCheckConfig(alpha, etas, "Z")] * 3 + [ParityCheckConfig(alpha, x_etas, "X")] * 3


def _tetra_specs(configs):
    if len(configs) != 6:
        raise ContractError("need six check configs, in stabilizer order S1..S6")
    for i, cfg in enumerate(configs):
        want = "Z" if i < 3 else "X"
        if cfg.basis != want or cfg.n != 3:
            raise ContractError(f"S{i + 1} needs a weight-3 {want}-basis check")
    return [CheckSpec(configs[i], STABILIZER_QUBITS[i]) for i in CHECK_ORDER]


def tetra_start():
    return product_state(*[PLUS] * 6)


def tetra_branches(configs):
    """Exact enumeration over all 64 inferred syndromes.

    Returns ``{syndrome tuple (sigma_1..sigma_6): unnormalized state}`` before
    correction; traces are the syndrome probabilities.
    """
    specs = _tetra_specs(configs)
    leaves = {(): dm(tetra_start())}
    for spec in specs:
        nxt = {}
        for key, rho in leaves.items():
            inf = thresholded_inference(check_blocks(rho, spec.cfg, spec.qubits))
            for m in (1, -1):
                nxt[key + (m,)] = inf.branch(m)
        leaves = nxt
    out = {}
    for key, rho in leaves.items():
        sigma = [0] * 6
        for pos, idx in enumerate(CHECK_ORDER):
            sigma[idx] = key[pos]
        out[tuple(sigma)] = rho
    return out


def _tetra_exact(configs):
    rho = np.zeros((64, 64), dtype=complex)
    for sigma, branch in tetra_branches(configs).items():
        rho += apply_pauli(branch, tetra_correction(sigma))
    return rho


def _tetra_correct(xs, states):
    sig = np.zeros((states.shape[0], 6), dtype=int)
    for pos, idx in enumerate(CHECK_ORDER):
        sig[:, idx] = np.where(xs[pos] >= 0, 1, -1)
    out = np.empty_like(states)
    codes = ((1 - sig) // 2) @ (1 << np.arange(6))
    for code in np.unique(codes):
        sel = codes == code
        sigma = tuple(int(s) for s in sig[np.argmax(sel)])
        out[sel] = apply_pauli_batch(states[sel], tetra_correction(sigma))
    return out, sig


def tetra_prepare(configs, mode="exact", seed=0, shot=0):
    """Measure S4..S6 then S1..S3 on |+>^6 with flying-cat checks and correct.

    Exact mode returns ``(averaged density matrix, None)``; sampled mode runs
    trajectory ``shot`` and returns ``(pure state, TetraSyndrome)``.
    """
    if mode == "exact":
        return _tetra_exact(configs), None
    if mode == "sampled":
        specs = _tetra_specs(configs)
        xs, states = run_trajectories(tetra_start(), specs, seed, 1, lambda f, x, s: (x, s))
        out, sig = _tetra_correct(xs, states)
        return out[0], TetraSyndrome(tuple(sig[0]))
    raise ContractError(f"unknown mode {mode!r}")


def tetra_fidelity(configs, mode="exact", shots=100_000, seed=0, workers=1):
    """Preparation fidelity with |T> and its standard error (0 in exact mode)."""
    if mode == "exact":
        return fidelity(_tetra_exact(configs), TETRA), 0.0
    specs = _tetra_specs(configs)

    def reducer(fired, xs, states):
        out, _ = _tetra_correct(xs, states)
        f = np.abs(out @ TETRA.conj()) ** 2
        return np.array([f.sum(), (f ** 2).sum()])

    s1, s2 = run_trajectories(tetra_start(), specs, seed, shots, reducer, workers)
    mean = s1 / shots
    return mean, math.sqrt(max(s2 / shots - mean ** 2, 0.0) / shots)


# -- witness -----------------------------------------------------------------

def _stabilizer_indicator(kind_cols):
    """Per basis index: 1 if every listed stabilizer has even parity there."""
    b = np.arange(64)
    ok = np.ones(64, dtype=bool)
    for c in kind_cols:
        _, zm = PauliString(STABILIZERS[c].labels.replace("X", "Z")).masks()
        ok &= np.array([bin(v).count("1") % 2 == 0 for v in (b & zm)])
    return ok.astype(float)


_Z_OK = _stabilizer_indicator(range(3))
_X_OK = _stabilizer_indicator(range(3, 6))


def stabilizer_projector(which):
    """Product of (1 + S_i)/2 over S1..S3 (``"Z"``) or S4..S6 (``"X"``)."""
    proj = np.eye(64, dtype=complex)
    cols = range(3) if which == "Z" else range(3, 6)
    for c in cols:
        proj = proj @ (0.5 * (np.eye(64) + STABILIZERS[c].matrix()))
    return proj


def witness_expectation(rho, mode="exact", shots=100_000, seed=0):
    """Witness 3/2 - P_Z - P_X with P the stabilizer-group projectors.

    Sampled mode estimates P_Z from all-qubit Z-basis outcomes and P_X from
    all-qubit X-basis outcomes (each projector is diagonal in its setting).
    ``fidelity`` is 1/2 - <W>.
    """
    rho = check_density(rho)
    pz_prob = np.clip(np.diag(rho).real, 0, None)
    px_prob = np.clip(np.diag(hadamard_all(rho)).real, 0, None)
    if mode == "exact":
        w = 1.5 - float(pz_prob @ _Z_OK) - float(px_prob @ _X_OK)
        return WitnessEstimate(w, 0.5 - w, 0.0)
    if mode != "sampled":
        raise ContractError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    est, var = [], 0.0
    for prob, ok in ((pz_prob, _Z_OK), (px_prob, _X_OK)):
        counts = rng.multinomial(shots, prob / prob.sum())
        f = float(counts @ ok) / shots
        est.append(f)
        var += f * (1 - f) / shots
    w = 1.5 - est[0] - est[1]
    return WitnessEstimate(w, 0.5 - w, math.sqrt(var))


def witness_noisy_model(pM, p1, p2):
    """<W> to leading order: at least one of six readouts wrong, or a loss error in the last round."""
    for v in (pM, p1, p2):
        if not 0 <= v <= 1:
            raise ContractError("probabilities must lie in [0, 1]")
    return -0.5 + (1 - (1 - pM) ** 6) + 3 * (p1 + p2)


def all_x_patterns():
    return [PauliString("".join("X" if b else "I" for b in bits))
            for bits in itertools.product((0, 1), repeat=6)]


def all_z_patterns():
    return [PauliString("".join("Z" if b else "I" for b in bits))
            for bits in itertools.product((0, 1), repeat=6)]


def error_syndrome(error):
    """Syndrome of a Pauli error on |T>: -1 where it anticommutes with S_i."""
    return TetraSyndrome(tuple(1 if s.commutes(error) else -1 for s in STABILIZERS))


def decoder_exhaustion(kinds=("X", "Z", "XZ")):
    """Decode every X, Z and combined error pattern; returns ``{kind: (cases, min fidelity)}``.

    The X part is decoded from sigma_1..3 and corrected first, then the Z
    part from sigma_4..6 of the remaining error.
    """
    xs, zs = all_x_patterns(), all_z_patterns()
    cases = {"X": [(x,) for x in xs], "Z": [(z,) for z in zs],
             "XZ": [(x, z) for x in xs for z in zs]}
    report = {}
    for kind in kinds:
        worst = 1.0
        for parts in cases[kind]:
            err = PauliString.identity(6)
            for p in parts:
                err = p * err
            sig = error_syndrome(err).sigma
            fixed = tetra_decode(sig, "X") * err
            fixed = tetra_decode(error_syndrome(fixed).sigma, "Z") * fixed
            worst = min(worst, abs(np.vdot(TETRA, apply_pauli(TETRA, fixed))) ** 2)
        report[kind] = (len(cases[kind]), worst)
    return report


def eigenspace_dimension():
    """Rank of the projector onto the common +1 eigenspace of S1..S6."""
    proj = stabilizer_projector("Z") @ stabilizer_projector("X")
    return int(round(np.trace(proj).real))


def optimize_tetra_alpha(eta, window=(0.2, 3.0), grid=30):
    """Amplitude maximizing the exact preparation fidelity at uniform segment loss ``eta``.

    Returns ``(alpha, fidelity)``: grid search, then bounded Brent refinement.
    """
    etas = (eta,) * 3

    def infid(a):
        return 1.0 - tetra_fidelity(tetra_configs(a, etas))[0]

    xs = np.linspace(*window, grid)
    vals = [infid(a) for a in xs]
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    res = optimize.minimize_scalar(infid, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    return float(res.x), 1.0 - float(res.fun)
