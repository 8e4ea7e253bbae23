"""Trajectory sampling of flying-cat checks, cross-checked against the exact engine.

Each shot carries a pure state.  A check fires each loss segment's Pauli
error with its Bernoulli probability, draws a homodyne outcome from the
two-Gaussian mixture set by the state's parity weights, and collapses the
state onto the outcome.  Shot ``i`` always uses random stream ``i`` of the
master seed, so results do not depend on batching or worker count.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from flyingcat import kernels
from flyingcat.paritycheck import (
    ParityCheckConfig,
    _check_qubits,
    check_blocks,
    loss_error_probabilities,
    sampler_error_operators,
    thresholded_inference,
)
from flyingcat.qcore import ContractError, PauliString, check_state, dm, num_qubits

SIGMA_FAIL = 5.0


@dataclass(frozen=True)
class CheckSpec:
    """One flying-cat check: its configuration and the register qubits it visits."""

    cfg: ParityCheckConfig
    qubits: tuple

    def operator(self, n_total):
        return PauliString.single(n_total, self.qubits, self.cfg.basis)


@dataclass
class TrajectoryConfig:
    seed: int
    shots: int
    checks: list

    def __post_init__(self):
        if self.shots < 1:
            raise ContractError("shots must be >= 1")


@dataclass
class TrajectoryRecord:
    errors: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    parities: list = field(default_factory=list)
    state: np.ndarray = None


def _as_spec(check, n_total):
    if isinstance(check, CheckSpec):
        spec = check
    else:
        cfg, qubits = check if isinstance(check, tuple) else (check, None)
        spec = CheckSpec(cfg, _check_qubits(cfg, n_total, qubits))
    _check_qubits(spec.cfg, n_total, spec.qubits)
    return spec


def _kernel_args(spec, n_total):
    ops = sampler_error_operators(spec.cfg, spec.qubits, n_total)
    masks = [p.masks() for p in ops]
    seg_x = np.array([m[0] for m in masks], dtype=np.uint64)
    seg_z = np.array([m[1] for m in masks], dtype=np.uint64)
    cx, cz = spec.operator(n_total).masks()
    return seg_x, seg_z, np.array(loss_error_probabilities(spec.cfg)), cx, cz, spec.cfg.abar


def sample_batch(states, spec, seed, streams, check_index=0):
    """Run one check on a batch of states; returns ``(fired, x, new_states)``."""
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    n_total = num_qubits(states.shape[1])
    spec = _as_spec(spec, n_total)
    seg_x, seg_z, probs, cx, cz, abar = _kernel_args(spec, n_total)
    return kernels.sample_checks(states, seed, streams, check_index,
                                 seg_x, seg_z, probs, cx, cz, abar)


def sample_check(state, cfg, seed, stream=0, check_index=0, qubits=None):
    """Sample a single check on one pure state.

    Randomness is the ``(seed, stream, check_index)`` stream of the
    counter-based generator.  Returns ``(record, new_state)`` where the record
    holds this check's applied error, homodyne sample and inferred parity.
    """
    state = check_state(state)
    n_total = num_qubits(state.size)
    spec = _as_spec((cfg, qubits), n_total)
    fired, x, out = sample_batch(state[None, :], spec, seed,
                                 np.array([stream], dtype=np.uint64), check_index)
    ops = sampler_error_operators(spec.cfg, spec.qubits, n_total)
    err = PauliString.identity(n_total)
    for k, hit in enumerate(fired[0]):
        if hit:
            err = err * ops[k]
    x0 = float(x[0])
    rec = TrajectoryRecord([err], [x0], [1 if x0 >= 0 else -1], out[0])
    return rec, out[0]


def apply_pauli_batch(states, p):
    """Apply one Pauli string to every row of ``states``."""
    xm, zm = p.masks()
    d = states.shape[1]
    b = np.arange(d)
    zpar = np.array([bin(v).count("1") & 1 for v in (b & zm)])
    phase = (1j ** (bin(xm & zm).count("1") + p.phase)) * (1 - 2 * zpar)
    out = np.empty_like(states)
    out[:, b ^ xm] = states * phase[None, :]
    return out


def run_block(state, specs, seed, start, stop):
    """Shots ``start..stop-1`` through the check sequence ``specs``.

    Returns ``(fired, xs, states)`` with one ``fired``/``xs`` entry per check.
    """
    streams = kernels.stream_ids(start, stop)
    states = np.repeat(np.asarray(state, dtype=complex)[None, :], stop - start, axis=0)
    fired, xs = [], []
    for idx, spec in enumerate(specs):
        f, x, states = sample_batch(states, spec, seed, streams, idx)
        fired.append(f)
        xs.append(x)
    return fired, xs, states


def run_trajectories(state, checks, seed, shots, reducer, workers=1):
    """Sample ``shots`` trajectories and fold each block through ``reducer``.

    ``reducer(fired, xs, states)`` must return something supporting ``+``;
    block partials are added in block order.
    """
    state = check_state(state)
    n_total = num_qubits(state.size)
    specs = [_as_spec(c, n_total) for c in checks]

    def block(a, b):
        return reducer(*run_block(state, specs, seed, a, b))

    return kernels.ordered_sum(kernels.map_blocks(block, shots, workers))


def trajectory(state, checks, seed, shot=0):
    """Full record of one shot through a sequence of checks."""
    state = check_state(state)
    n_total = num_qubits(state.size)
    specs = [_as_spec(c, n_total) for c in checks]
    fired, xs, out = run_block(state, specs, seed, shot, shot + 1)
    rec = TrajectoryRecord(state=out[0])
    for spec, f, x in zip(specs, fired, xs):
        ops = sampler_error_operators(spec.cfg, spec.qubits, n_total)
        err = PauliString.identity(n_total)
        for k, hit in enumerate(f[0]):
            if hit:
                err = err * ops[k]
        rec.errors.append(err)
        rec.samples.append(float(x[0]))
        rec.parities.append(1 if x[0] >= 0 else -1)
    return rec


@dataclass
class ComparisonReport:
    shots: int
    max_deviation: float
    max_sigma: float
    weights_sigma: float
    joint_sigma: float
    joint_exact: dict
    joint_empirical: dict
    rho_exact: dict
    rho_empirical: dict
    n_compared: int

    @property
    def failed(self):
        return max(self.max_sigma, self.weights_sigma, self.joint_sigma) > SIGMA_FAIL


def _z(dev, se, exact_tol=1e-9):
    # deterministic entries (zero spread) must match exactly
    z = np.where(se > 1e-12, np.abs(dev) / np.where(se > 1e-12, se, 1.0),
                 np.where(np.abs(dev) <= exact_tol, 0.0, np.inf))
    return z


def mc_vs_exact(cfg, psi, shots, seed=0, qubits=None, workers=1):
    """Compare sampled post-selected states with the exact thresholded states.

    For each inferred parity, every upper-triangle entry of the empirical
    mean of |psi_x><psi_x| is compared with the exact normalized state; the
    report gives the largest absolute deviation and the largest z-score.
    """
    if shots < 10_000:
        raise ContractError("mc_vs_exact needs at least 10^4 shots")
    psi = check_state(psi)
    n_total = num_qubits(psi.size)
    spec = _as_spec((cfg, qubits), n_total)
    exact = thresholded_inference(check_blocks(dm(psi), spec.cfg, spec.qubits))
    par = spec.operator(n_total).matrix()
    proj = {a: 0.5 * (np.eye(psi.size) + a * par) for a in (1, -1)}

    def reducer(fired, xs, states):
        x = xs[0]
        out = []
        for s in (1, -1):
            sel = states[(x >= 0) if s > 0 else (x < 0)]
            outer = np.einsum("ki,kj->kij", sel, sel.conj())
            w = [np.einsum("ki,ij,kj->k", sel.conj(), proj[a], sel).real for a in (1, -1)]
            out.append(np.concatenate([
                [len(sel)],
                outer.real.sum(0).ravel(), (outer.real ** 2).sum(0).ravel(),
                outer.imag.sum(0).ravel(), (outer.imag ** 2).sum(0).ravel(),
                [w[0].sum(), (w[0] ** 2).sum(), w[1].sum(), (w[1] ** 2).sum()],
            ]))
        return np.stack(out)

    agg = run_trajectories(psi, [spec], seed, shots, reducer, workers)
    d = psi.size
    iu = np.triu_indices(d)
    max_dev, max_z, n_cmp = 0.0, 0.0, 0
    rho_emp, rho_ex = {}, {}
    joint_emp, joint_z = {}, 0.0
    w_z = 0.0
    for row, s in zip(agg, (1, -1)):
        cnt = row[0]
        off = 1
        sr, sr2, si, si2 = (row[off + j * d * d: off + (j + 1) * d * d].reshape(d, d) for j in range(4))
        tail = row[off + 4 * d * d:]
        weight_ex = exact.weight_plus if s > 0 else exact.weight_minus
        pw = cnt / shots
        w_z = max(w_z, abs(pw - weight_ex) / math.sqrt(max(weight_ex * (1 - weight_ex), 1e-300) / shots)
                  if 0 < weight_ex < 1 else (0.0 if abs(pw - weight_ex) < 1e-12 else np.inf))
        for k, a in enumerate((1, -1)):
            m1, m2 = tail[2 * k] / shots, tail[2 * k + 1] / shots
            se = math.sqrt(max(m2 - m1 ** 2, 0.0) / shots)
            ex = exact.joint[(s, a)]
            joint_emp[(s, a)] = m1
            joint_z = max(joint_z, float(_z(np.array(m1 - ex), np.array(se))))
        if cnt == 0:
            continue
        mean = (sr + 1j * si) / cnt
        var_r = np.maximum(sr2 / cnt - (sr / cnt) ** 2, 0.0)
        var_i = np.maximum(si2 / cnt - (si / cnt) ** 2, 0.0)
        target = exact.branch(s) / weight_ex
        dev = mean - target
        zr = _z(dev.real[iu], np.sqrt(var_r[iu] / cnt))
        zi = _z(dev.imag[iu], np.sqrt(var_i[iu] / cnt))
        max_z = max(max_z, float(zr.max()), float(zi.max()))
        max_dev = max(max_dev, float(np.abs(dev).max()))
        n_cmp += 2 * len(iu[0])
        rho_emp[s], rho_ex[s] = mean, target
    return ComparisonReport(shots, max_dev, max_z, w_z, joint_z, dict(exact.joint),
                            joint_emp, rho_ex, rho_emp, n_cmp)


def sampled_joint(cfg, psi, shots, seed=0, qubits=None, workers=1):
    """Sampled joint table ``{(inferred, actual): (probability, stderr)}``.

    ``actual`` is the check parity of the post-measurement state, counted
    with its Born weight on each shot.
    """
    psi = check_state(psi)
    n_total = num_qubits(psi.size)
    spec = _as_spec((cfg, qubits), n_total)
    par = spec.operator(n_total).matrix()

    def reducer(fired, xs, states):
        e = np.einsum("ki,ij,kj->k", states.conj(), par, states).real
        out = []
        for s in (1, -1):
            sel = (xs[0] >= 0) if s > 0 else (xs[0] < 0)
            for a in (1, -1):
                w = np.where(sel, 0.5 * (1 + a * e), 0.0)
                out += [w.sum(), (w ** 2).sum()]
        return np.array(out)

    agg = run_trajectories(psi, [spec], seed, shots, reducer, workers)
    table = {}
    for i, key in enumerate([(s, a) for s in (1, -1) for a in (1, -1)]):
        m1, m2 = agg[2 * i] / shots, agg[2 * i + 1] / shots
        table[key] = (m1, math.sqrt(max(m2 - m1 ** 2, 0.0) / shots))
    return table
