"""hflcyc: a proof kernel and cyclic-proof checker for higher-order
fixed-point logic over the naturals, with a decision procedure for the
global trace condition, a bounded semantic evaluator, admissible-rule
elaborators and a small proof-search loop.
"""

__version__ = "0.1.0"
