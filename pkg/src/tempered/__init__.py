"""Kernel-regression overfitting laboratory.

Closed-form risk prediction from kernel eigenspectra, a rule-based
benign/tempered/catastrophic classifier, and desk-scale Monte-Carlo
experiments (kernel regression on spheres, synthetic powerlaw features,
1-D toy interpolators and nearest-neighbour baselines).
"""

__version__ = "0.1.0"
