"""thermofuse: fusion models for predicting protein stability change
(kcal/mol) under single-point mutations, plus the surrounding toolkit —
PDB backbone parsing, embeddings, training, evaluation metrics, analysis,
mutation scans and an HTTP explorer API.
"""

__version__ = "0.1.0"

from thermofuse.kernels import backend_name as kernel_backend  # noqa: F401
