"""Duplicate bug-report retrieval: preprocess, vectorize, nominate, rerank, evaluate."""

__version__ = "0.1.0"
