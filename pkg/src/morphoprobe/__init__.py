"""Morphosyntactic probing toolkit.

Builds single-feature classification tasks out of Universal Dependencies
treebanks, trains small probes on frozen sentence embeddings (or a
character-level recurrent baseline), measures the effect of controlled
input perturbations, and attributes probe accuracy to positional context
via exact Shapley values over masking coalitions.
"""

__version__ = "0.1.0"
