"""Lossy flying-cat parity checks.

A coherent pulse |alpha> reflects off each qubit of the check in turn, picking
up a pi phase for every qubit in |1>.  A beam splitter after each interaction
models photon loss.  Tracing out the loss modes leaves a joint qubit/field
state resolved into parity blocks; homodyne detection of the field then
infers the parity.

Everything here works on an ordered subset of a larger register, so the same
routines drive single checks, GHZ preparation and tetrahedron preparation.
"""

import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from flyingcat import kernels
from flyingcat.field import check_losses, homodyne_amplitude, propagate_losses
from flyingcat.qcore import (
    ContractError,
    H,
    PauliString,
    apply_local,
    apply_pauli,
    check_density,
    num_qubits,
)

SIGNS = (1, -1)
QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    def __init__(self, achieved):
        super().__init__(f"quadrature did not converge (estimated error {achieved:.3g})")
        self.achieved = achieved


class OutOfSupport(ValueError):
    """Homodyne outcome with vanishing probability density."""


@dataclass(frozen=True)
class ParityCheckConfig:
    alpha: float
    etas: tuple
    basis: str = "Z"

    def __post_init__(self):
        if isinstance(self.alpha, complex):
            raise ContractError("alpha must be real")
        if not self.alpha >= 0:
            raise ContractError(f"alpha must be non-negative, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "etas", check_losses(self.etas))
        if len(self.etas) not in (2, 3):
            raise ContractError("checks have weight 2 or 3")
        if self.basis not in ("Z", "X"):
            raise ContractError(f"basis must be 'Z' or 'X', got {self.basis!r}")

    @property
    def n(self):
        return len(self.etas)

    @property
    def abar(self):
        return propagate_losses(self.alpha, self.etas)[0]

    @property
    def leaked(self):
        return propagate_losses(self.alpha, self.etas)[1]


@dataclass
class PreMeasurementState:
    """Qubit/field state before homodyne detection.

    ``blocks[(s, t)]`` multiplies ``|s*abar><t*abar|`` of the field; ``s`` and
    ``t`` are parity signs (+1 even, -1 odd).  Blocks are full-register
    matrices supported on the corresponding parity sectors.
    """

    abar: float
    blocks: dict
    qubits: tuple = ()
    basis: str = "Z"

    @property
    def weights(self):
        return {s: float(np.trace(self.blocks[(s, s)]).real) for s in SIGNS}

    def qubit_state(self):
        """Reduced qubit state with the field traced out."""
        ov = math.exp(-2 * self.abar ** 2)
        return (self.blocks[(1, 1)] + self.blocks[(-1, -1)]
                + ov * (self.blocks[(1, -1)] + self.blocks[(-1, 1)]))


@dataclass
class ThresholdedInference:
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    joint: dict
    pM: float
    quad_error: float = 0.0

    @property
    def weight_plus(self):
        return float(np.trace(self.rho_plus).real)

    @property
    def weight_minus(self):
        return float(np.trace(self.rho_minus).real)

    def branch(self, sign):
        return self.rho_plus if sign > 0 else self.rho_minus


@dataclass
class ErrorBudget:
    p1: float
    p2: float
    pM: float
    ptot: float
    p_any: float
    ptot_asymptotic: float
    p_segments: tuple = dc_field(default=())
    ptot_asymptotic_full_loss: float = float("nan")


def _check_qubits(cfg, n_total, qubits):
    qubits = tuple(range(cfg.n)) if qubits is None else tuple(qubits)
    if len(qubits) != cfg.n:
        raise ContractError(f"check of weight {cfg.n} given {len(qubits)} qubits")
    if len(set(qubits)) != len(qubits) or not all(0 <= q < n_total for q in qubits):
        raise ContractError(f"invalid check qubits {qubits} for {n_total} qubits")
    return qubits


def running_parities(n_total, qubits):
    """Array ``mu[k, s]``: parity of the first k+1 check qubits in basis state s."""
    s = np.arange(1 << n_total)
    bits = [(s >> (n_total - 1 - q)) & 1 for q in qubits]
    return np.bitwise_xor.accumulate(np.array(bits), axis=0)


def dephasing_multiplier(n_total, qubits, leaked):
    """Entrywise factor exp(-2 sum_k |a_k|^2 [mu_k(s) != mu_k(s')]) from tracing loss modes."""
    mu = running_parities(n_total, qubits)
    w = 2 * np.abs(np.asarray(leaked)) ** 2
    expo = np.zeros((1 << n_total, 1 << n_total))
    for k in range(len(qubits)):
        expo += w[k] * (mu[k][:, None] != mu[k][None, :])
    return np.exp(-expo), mu[-1]


def _hadamards(rho, qubits):
    return apply_local(rho, {q: H for q in qubits})


def check_blocks(rho, cfg, qubits=None):
    """Exact lossy check without input validation (rho may be unnormalized)."""
    rho = np.asarray(rho, dtype=complex)
    n_total = num_qubits(rho.shape[0])
    qubits = _check_qubits(cfg, n_total, qubits)
    abar, leaked = propagate_losses(cfg.alpha, cfg.etas)
    if cfg.basis == "X":
        rho = _hadamards(rho, qubits)
    mult, par = dephasing_multiplier(n_total, qubits, leaked)
    rho = rho * mult
    blocks = {}
    for s in SIGNS:
        rows = par == (0 if s > 0 else 1)
        for t in SIGNS:
            cols = par == (0 if t > 0 else 1)
            b = np.zeros_like(rho)
            b[np.ix_(rows, cols)] = rho[np.ix_(rows, cols)]
            if cfg.basis == "X":
                b = _hadamards(b, qubits)
            blocks[(s, t)] = b
    return PreMeasurementState(abar=float(abar), blocks=blocks, qubits=qubits, basis=cfg.basis)


def run_check_exact(rho_in, cfg, qubits=None):
    """Entangle the qubits with |alpha>, apply the losses, trace the loss modes.

    ``qubits`` lists the register qubits in the order the pulse visits them
    (default: all qubits, in order).
    """
    rho_in = check_density(rho_in)
    return check_blocks(rho_in, cfg, qubits)


def loss_error_probabilities(cfg):
    return [0.5 * (1 - math.exp(-2 * abs(a) ** 2)) for a in cfg.leaked]


def dephasing_decomposition(cfg, qubits=None, n_total=None):
    """Loss as a sequence of Pauli dephasing channels ``[(p_k, E_k)]``.

    Loss after interaction k acts like ``E_k`` = the check's Pauli on every
    qubit visited after k.  The last term is the identity: loss after the
    final interaction leaves the qubits alone within each parity sector.
    """
    n_total = cfg.n if n_total is None else n_total
    qubits = _check_qubits(cfg, n_total, qubits)
    probs = loss_error_probabilities(cfg)
    return [(p, PauliString.single(n_total, qubits[k + 1:], cfg.basis))
            for k, p in enumerate(probs)]


def apply_dephasing(rho, terms):
    """Compose the channels rho -> (1-p) rho + p E rho E, last term applied first."""
    rho = np.asarray(rho, dtype=complex)
    for p, e in reversed(terms):
        rho = (1 - p) * rho + p * apply_pauli(rho, e)
    return rho


def sampler_error_operators(cfg, qubits=None, n_total=None):
    """Per-segment Paulis that unravel the loss channel on all four blocks.

    Loss after interaction k flips the sign of the loss-mode label by the
    running parity of the first k qubits, so the exact unravelling applies
    the check's Pauli on those first k qubits.  This equals the tail error
    of ``dephasing_decomposition`` times the measured parity operator, i.e.
    the same error on each parity sector.
    """
    n_total = cfg.n if n_total is None else n_total
    qubits = _check_qubits(cfg, n_total, qubits)
    return [PauliString.single(n_total, qubits[:k + 1], cfg.basis) for k in range(cfg.n)]


def channel_equivalence_error(rho, cfg, qubits=None, operators="tail"):
    """Largest entrywise gap between the Pauli-channel composition and the exact blocks.

    ``operators="tail"`` compares the diagonal parity blocks only (the tail
    decomposition is exact there); ``"prefix"`` compares all four blocks.
    """
    rho = np.asarray(rho, dtype=complex)
    n_total = num_qubits(rho.shape[0])
    qubits = _check_qubits(cfg, n_total, qubits)
    pre = check_blocks(rho, cfg, qubits)
    if operators == "tail":
        terms = dephasing_decomposition(cfg, qubits, n_total)
        pairs = [(s, s) for s in SIGNS]
    elif operators == "prefix":
        probs = loss_error_probabilities(cfg)
        terms = list(zip(probs, sampler_error_operators(cfg, qubits, n_total)))
        pairs = [(s, t) for s in SIGNS for t in SIGNS]
    else:
        raise ContractError(f"unknown operator family {operators!r}")
    out = apply_dephasing(rho, terms)
    par = PauliString.single(n_total, qubits, cfg.basis).matrix()
    proj = {s: 0.5 * (np.eye(rho.shape[0]) + s * par) for s in SIGNS}
    return max(float(np.abs(proj[s] @ out @ proj[t] - pre.blocks[(s, t)]).max()) for s, t in pairs)


def conditional_post_state(pre, x):
    """Qubit state conditioned on homodyne outcome x, and the density p(x)."""
    g = {s: float(homodyne_amplitude(x, s * pre.abar)) for s in SIGNS}
    px = sum(float(np.trace(pre.blocks[(s, s)]).real) * g[s] ** 2 for s in SIGNS)
    if px < 1e-300:
        raise OutOfSupport(f"p(x={x}) = {px:.3g}")
    rho = sum(pre.blocks[(s, t)] * (g[s] * g[t]) for s in SIGNS for t in SIGNS)
    return rho / px, px


def outcome_density(pre, x):
    x = np.asarray(x, dtype=float)
    return sum(pre.weights[s] * homodyne_amplitude(x, s * pre.abar) ** 2 for s in SIGNS)


@lru_cache(maxsize=256)
def half_line_integrals(abar):
    """``I[(half, s, t)] = int over the half-line of <x|s abar><t abar|x> dx``.

    Adaptive Gauss-Kronrod (QUADPACK) on [-L, 0] and [0, L] with
    L = sqrt(2) abar + 10, beyond which the Gaussians vanish to machine
    precision.  Returns ``(integrals, max estimated error)``.
    """
    lim = math.sqrt(2) * abs(abar) + 10.0
    out = {}
    worst = 0.0
    for half, (lo, hi) in ((1, (0.0, lim)), (-1, (-lim, 0.0))):
        for s, t in ((1, 1), (-1, -1), (1, -1)):
            f = lambda x, s=s, t=t: (homodyne_amplitude(x, s * abar)
                                     * homodyne_amplitude(x, t * abar))
            val, err, info = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=QUAD_TOL,
                                            limit=200, full_output=True)[:3]
            if err > 1e-9:
                raise QuadratureError(err)
            worst = max(worst, err)
            out[(half, s, t)] = val
            if s != t:
                out[(half, t, s)] = val
    return out, worst


def thresholded_inference(pre):
    """Post-measurement states for the sign decision x >= 0 (even) / x < 0 (odd).

    ``rho_plus``/``rho_minus`` are unnormalized; their traces are the
    probabilities of inferring each parity.  ``joint[(inferred, actual)]``.
    """
    ints, qerr = half_line_integrals(float(pre.abar))
    rho = {}
    for half in SIGNS:
        rho[half] = sum(pre.blocks[(s, t)] * ints[(half, s, t)] for s in SIGNS for t in SIGNS)
    joint = {}
    for half in SIGNS:
        for a in SIGNS:
            joint[(half, a)] = float(np.trace(pre.blocks[(a, a)]).real) * ints[(half, a, a)]
    pM = joint[(1, -1)] + joint[(-1, 1)]
    return ThresholdedInference(rho[1], rho[-1], joint, pM, qerr)


def joint_closed_form(weights, abar):
    """P("inferred", actual) from the erfc expression."""
    q = 0.5 * math.erfc(math.sqrt(2) * abar)
    return {(s, a): weights[a] * (q if s != a else 1 - q) for s in SIGNS for a in SIGNS}


def measurement_error(abar):
    return 0.5 * math.erfc(math.sqrt(2) * abar)


def error_budget(alpha, etas):
    """Error probabilities of one check with coherent amplitude ``alpha``."""
    if not alpha > 0:
        raise ContractError("alpha must be positive")
    cfg = ParityCheckConfig(alpha, etas)
    p_seg = loss_error_probabilities(cfg)[:-1]
    p1 = p_seg[0]
    p2 = p_seg[1] if len(p_seg) > 1 else 0.0
    pM = measurement_error(cfg.abar)
    ptot = pM + sum(p_seg)
    p_any = 1 - (1 - pM) * np.prod([1 - p for p in p_seg])
    # asymptotic form as printed (loss term halved), and with p_j ~ eta_j alpha^2
    tail = 0.5 * math.exp(-2 * alpha ** 2) / (alpha * math.sqrt(2 * math.pi))
    loss = sum(cfg.etas[:2]) * alpha ** 2
    return ErrorBudget(p1, p2, pM, ptot, float(p_any), tail + 0.5 * loss, tuple(p_seg), tail + loss)


def total_error(alpha, etas):
    return error_budget(alpha, etas).ptot


def optimize_alpha(etas, window=(0.05, 4.0), grid=400):
    """Amplitude minimizing the exact total error within ``window``.

    A coarse grid locates the basin, then bounded Brent refines it.
    """
    etas = check_losses(etas)
    if not any(e > 0 for e in etas[:-1]):
        raise ContractError("no loss before the last interaction: total error decreases without bound in alpha")
    lo, hi = window
    xs = np.linspace(lo, hi, grid)
    vals = np.array([total_error(a, etas) for a in xs])
    i = int(np.argmin(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda a_: total_error(a_, etas), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-10})
    astar = float(res.x)
    if astar - lo < 1e-6 or hi - astar < 1e-6:
        raise ContractError(f"minimum at window edge ({astar}); widen the search window")
    return astar, float(res.fun)


def repeated_decision(N, alpha0, etas, mode="soft", shots=100_000, seed=0, workers=1):
    """Monte Carlo error rate of N repeated homodyne parity readouts.

    ``etas`` is one loss profile applied to every readout, or a list of N
    profiles.  Returns ``(error_probability, standard_error)``.
    """
    if N < 1:
        raise ContractError("N must be >= 1")
    if mode not in ("soft", "hard"):
        raise ContractError(f"mode must be 'soft' or 'hard', got {mode!r}")
    if mode == "hard" and N % 2 == 0:
        raise ContractError("majority vote needs odd N")
    if len(etas) and np.ndim(etas[0]) == 0:
        profiles = [etas] * N
    else:
        profiles = list(etas)
        if len(profiles) != N:
            raise ContractError("need one loss profile per readout")
    amps = np.array([math.sqrt(2) * propagate_losses(alpha0, p)[0] for p in profiles])
    soft = mode == "soft"

    def block(a, b):
        return int(kernels.repeated_decisions(seed, kernels.stream_ids(a, b), amps, soft).sum())

    errors = kernels.ordered_sum(kernels.map_blocks(block, shots, workers))
    p = errors / shots
    return p, math.sqrt(max(p * (1 - p), 1.0 / shots) / shots)


def hook_gauge_reduce(error, basis="Z"):
    """Reduce a hook error on a weight-3 check modulo the gauge operator."""
    if len(error) != 3:
        raise ContractError("gauge reduction is defined for weight-3 checks")
    gauge = PauliString(basis * 3)
    reduced = error * gauge
    return reduced if reduced.weight < error.weight else error
