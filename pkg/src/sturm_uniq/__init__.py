"""L^p-uniqueness of one-dimensional Sturm-Liouville operators.

The operator ``L f = a f'' + b f' - V f`` on an interval is L^p-unique when its
boundaries are "no entrance" in the iterated-integral sense.  This package
classifies boundaries numerically (two independent routes: an iterated
integral series and a Riccati ODE) and, for power-law families, exactly.
"""

__version__ = "0.1.0"
