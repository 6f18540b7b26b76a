"""Law-invariant risk measures as statistical functionals: evaluation,
plug-in estimation, probability metrics and qualitative robustness."""

__version__ = "0.1.0"
