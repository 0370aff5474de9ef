"""Noncommutative symmetric functions and the inversion problem for F_t = z - tH.

Exact rational computations: the free algebra NSym and its five families,
truncated series and polynomial maps, normal-ordered differential operators,
and the inversion, D-Log, flow and Jacobian experiments built on them.
"""

__version__ = "0.1.0"
