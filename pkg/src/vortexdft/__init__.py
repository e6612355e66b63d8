"""Small-energy spectral theory of the linearized Gross-Pitaevskii vortex operator.

The package builds, for the 2x2 non-selfadjoint half-line operator
``L = [[0, L1], [-L2, 0]]`` with ``L_j = -d^2/dr^2 + 3/(4 r^2) + potentials``:

* the degree-one vortex profile and its linearization potentials,
* zero-energy fundamental systems and Green operators,
* interior (r = 0) and exterior (r = infinity) fundamental matrices at
  small complex energy,
* connection coefficients, the spectral density C(lambda) and the
  distorted Fourier vector,
* resolvent kernels, spectral projectors and the frequency-localized
  evolution as an oscillatory integral,
* an independent Crank-Nicolson time propagator used to cross-validate
  the evolution representation.
"""

from .config import RunConfig
from .grids import RadialGrid

__all__ = ["RunConfig", "RadialGrid"]
__version__ = "0.1.0"
