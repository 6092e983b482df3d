"""Low-discrepancy sequence toolkit.

Classical number-theoretic generators, closed-form L2 discrepancy evaluation
and differentiation over all sequence prefixes, a trainable neural
index-to-point map, and benchmark harnesses for QMC integration, sensitivity
weighting, and sampling-based motion planning.
"""

__version__ = "0.1.0"
