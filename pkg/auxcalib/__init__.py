"""
Post-hoc confidence calibration of classifier logits with an auxiliary
"misclassified" class, plus the usual calibration baselines and metrics.
"""

__version__ = "0.3"
APP_NAME = "auxcalib"
