"""Exact gauge calculus for meromorphic connections on the formal punctured disc.

Connections are matrices of truncated Laurent series over Q with explicit
precision windows.  The library normalizes connections with regular
(-nilpotent) leading coefficient into oper form with replayable gauge
certificates, finds cyclic vectors for gl_n connections, and provides
membership tests, regular-point searches and tangent dimensions for deformed
affine Springer fibers.
"""

__version__ = "0.1.0"

from .errors import OperforgeError  # noqa: F401
from .laurent import INF, MatrixSeries, TruncatedLaurentSeries  # noqa: F401
from .liealg import make_context  # noqa: F401
from .gauge import Connection, GaugeElement, gauge_transform  # noqa: F401
