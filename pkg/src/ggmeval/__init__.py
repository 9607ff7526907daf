"""Evaluate graph generative models with random-GIN embeddings and classical graph statistics."""

from .embed import GinConfig, embed_set, init_weights
from .graphcore import FeatureSchema, Graph, GraphSet, load_graphset, make_dataset, save_graphset

__version__ = "0.1.0"
