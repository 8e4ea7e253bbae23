"""Coherent-state bookkeeping: overlaps, beam-splitter loss, homodyne amplitudes."""

import math

import numpy as np

from flyingcat.qcore import ContractError


def check_losses(etas):
    etas = tuple(float(e) for e in etas)
    for e in etas:
        if not 0.0 <= e < 1.0:
            raise ContractError(f"reflectivity {e} outside [0, 1)")
    return etas


def coherent_overlap(a, b):
    """<b|a> for coherent states |a>, |b>."""
    a, b = complex(a), complex(b)
    return np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + b.conjugate() * a)


def propagate_losses(alpha, etas):
    """Send |alpha> through beam splitters with reflectivities ``etas`` in order.

    Returns ``(abar, leaked)``: the transmitted amplitude and the amplitude
    scattered into each loss mode.
    """
    etas = check_losses(etas)
    alpha = complex(alpha) if isinstance(alpha, complex) else float(alpha)
    leaked = []
    carried = alpha
    for e in etas:
        leaked.append(carried * math.sqrt(e))
        carried = carried * math.sqrt(1.0 - e)
    return carried, leaked


def homodyne_amplitude(x, alpha):
    """Position-quadrature wavefunction <x|alpha> for real alpha."""
    if isinstance(alpha, complex) or np.iscomplexobj(alpha):
        if np.imag(alpha) != 0:
            raise ContractError("homodyne amplitude needs a real alpha; rotate the phase reference first")
        alpha = np.real(alpha)
    x = np.asarray(x, dtype=float)
    return np.pi ** -0.25 * np.exp(-0.5 * (x - math.sqrt(2.0) * alpha) ** 2)


def homodyne_density(x, alpha):
    return homodyne_amplitude(x, alpha) ** 2


def tail_probability(alpha):
    """P(x < 0) for |alpha>, alpha real: erfc(sqrt(2) alpha) / 2."""
    return 0.5 * math.erfc(math.sqrt(2.0) * float(alpha))
