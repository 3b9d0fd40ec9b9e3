"""d2emo: data-driven multi-objective optimization by multiple-gradient descent."""

__version__ = "0.1.0"
