"""First-order factoid question answering over a triple-store knowledge base.

Two-stage pipeline: per-token entity detection and relation
classification distill a question into {entity phrase, relation}; a
TF-IDF n-gram alias index retrieves candidate entities and a
reachability index resolves the best supporting fact.
"""

__version__ = "0.1.0"
