"""Nomological-network toolkit for survey indicators.

Turn a labeled corpus of survey items into a network of latent dimensions
(components extracted from an embedding similarity matrix, obliquely
rotated), project new items into that network to assess what they measure,
and train, evaluate, name, and explore the pieces around it.
"""

__version__ = "0.1.0"

from .corpus import Corpus, Indicator, load_corpus, preprocess
from .network import DimensionMeta, NetworkModel, load_network, save_network

__all__ = [
    "Corpus",
    "Indicator",
    "load_corpus",
    "preprocess",
    "DimensionMeta",
    "NetworkModel",
    "load_network",
    "save_network",
    "__version__",
]
