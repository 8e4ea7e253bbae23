"""Pure numpy implementation of the trajectory kernels.

Mirrors ``_kernels.pyx`` function for function.  Random draws come from the
same counter-based generator, so both backends see identical uniforms for a
given ``(seed, stream, check, draw)`` tuple; Gaussian deviates agree to the
last few ulps (libm vs numpy transcendental functions).
"""

import numpy as np

BACKEND = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0


def _mix(z):
    # splitmix64 finalizer; wraps mod 2**64 on uint64 arrays
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _keys(seed, streams, check):
    streams = np.asarray(streams, dtype=np.uint64)
    base = np.full(streams.shape, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    k = _mix(base)
    k = _mix(k + streams * _GOLDEN)
    return _mix(k + np.array([check + 1], dtype=np.uint64) * _GOLDEN)


def uniforms(seed, streams, ndraw, check=0):
    """Uniform [0, 1) draws, shape ``(len(streams), ndraw)``."""
    keys = _keys(seed, streams, check)
    j = (np.arange(1, ndraw + 1, dtype=np.uint64) * _GOLDEN)[None, :]
    bits = _mix(keys[:, None] + j)
    return (bits >> _S11).astype(np.float64) * _TWO53


def _gauss(u1, u2):
    return np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(2.0 * np.pi * u2)


def _popcount_parity(v):
    v = v.copy()
    p = np.zeros(v.shape, dtype=np.int64)
    while np.any(v):
        p ^= (v & 1).astype(np.int64)
        v >>= 1
    return p


def _pauli_perm_phase(d, xmask, zmask):
    b = np.arange(d, dtype=np.int64)
    sign = 1.0 - 2.0 * _popcount_parity(b & zmask)
    ny = bin(xmask & zmask).count("1")
    phase = sign * (1j ** ny)
    return b ^ xmask, phase


def _apply(states, xmask, zmask):
    d = states.shape[1]
    target, phase = _pauli_perm_phase(d, xmask, zmask)
    out = np.empty_like(states)
    out[:, target] = states * phase[None, :]
    return out


def sample_checks(states, seed, streams, check, seg_x, seg_z, probs,
                  chk_x, chk_z, abar):
    """Sample one lossy flying-cat check on a batch of pure states.

    Per shot: Bernoulli(probs[k]) for each loss segment k, applying the
    Pauli (seg_x[k], seg_z[k]) when it fires; then a homodyne sample x from
    the two-Gaussian mixture weighted by the parity weights of the check
    operator (chk_x, chk_z); then collapse onto the x-conditioned state.

    Returns ``(fired, x, out)``.
    """
    states = np.array(states, dtype=np.complex128, copy=True)
    m, _ = states.shape
    n = len(probs)
    u = uniforms(seed, streams, n + 3, check)
    fired = (u[:, :n] < np.asarray(probs)[None, :]).astype(np.uint8)
    for k in range(n):
        hit = fired[:, k].astype(bool)
        if hit.any():
            states[hit] = _apply(states[hit], int(seg_x[k]), int(seg_z[k]))

    pstates = _apply(states, int(chk_x), int(chk_z))
    e = np.einsum("ij,ij->i", states.conj(), pstates).real
    wplus = np.clip(0.5 * (1.0 + e), 0.0, 1.0)
    sigma = np.where(u[:, n] < wplus, 1.0, -1.0)
    a = np.sqrt(2.0) * abar
    x = sigma * a + _gauss(u[:, n + 1], u[:, n + 2]) / np.sqrt(2.0)

    # relative Gaussian amplitudes, larger one scaled to 1
    r = np.exp(-2.0 * a * np.abs(x))
    gp = np.where(x >= 0, 1.0, r)
    gm = np.where(x >= 0, r, 1.0)
    out = 0.5 * (gp + gm)[:, None] * states + 0.5 * (gp - gm)[:, None] * pstates
    norm = np.linalg.norm(out, axis=1)
    bad = norm < 1e-300
    if bad.any():
        # amplitude ratio underflowed: collapse onto the populated sector
        keep = np.where(wplus[bad] > 0.5, 1.0, -1.0)[:, None]
        out[bad] = 0.5 * (states[bad] + keep * pstates[bad])
        norm[bad] = np.linalg.norm(out[bad], axis=1)
    out /= norm[:, None]
    return fired, x, out


def repeated_decisions(seed, streams, amps, soft):
    """Decision errors for N repeated homodyne shots on an even-parity state.

    ``amps[k]`` is sqrt(2)*abar for shot k.  Soft mode thresholds the
    log-likelihood ratio sum_k amps[k]*x_k; hard mode takes a majority vote
    of sign(x_k).  sign(0) counts as even.  Returns uint8 error flags.
    """
    amps = np.asarray(amps, dtype=np.float64)
    nrep = len(amps)
    u = uniforms(seed, streams, 2 * nrep, 0)
    z = _gauss(u[:, 0::2], u[:, 1::2])
    x = amps[None, :] + z / np.sqrt(2.0)
    if soft:
        decision = (x * amps[None, :]).sum(axis=1) >= 0.0
    else:
        votes = (x >= 0.0).sum(axis=1)
        decision = 2 * votes > nrep
    return (~decision).astype(np.uint8)
