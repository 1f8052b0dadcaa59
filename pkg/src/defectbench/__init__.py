"""Imbalanced software-defect prediction: OS-ELM, KMFOS oversampling, baselines, benchmark."""

__version__ = "0.1.0"
