"""Flying-cat parity checks under photon loss.

Exact lossy-check channels, homodyne inference, trajectory sampling, GHZ and
tetrahedron-state protocols, controlled teleportation and circuit-QED budgets.
"""

__version__ = "0.1.0"

from flyingcat.paritycheck import ParityCheckConfig  # noqa: E402
from flyingcat.qcore import ContractError, PauliString  # noqa: E402

__all__ = ["ContractError", "PauliString", "ParityCheckConfig", "__version__"]
