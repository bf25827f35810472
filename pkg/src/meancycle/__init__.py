"""
meancycle: minimum mean-weight and minimum max-weight cycles in complete
graphs with i.i.d. Exp(1) edge weights.

Modules: ``instances`` (sampling, cycles, lightness), ``solvers`` (exact
algorithms), ``analytic`` (limit laws), ``experiments`` (Monte Carlo) and
``cli``.
"""
__version__ = "0.1.0"
