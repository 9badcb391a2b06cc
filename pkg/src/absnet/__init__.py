"""Prediction of the relative abstractness level of image-text pairs.

The package covers the full pipeline: XML article ingestion, synthetic
corpus generation, vocabulary building, a multimodal autoencoder
(image CNN + hierarchical attention text encoder, convolutional image
decoder + hierarchical LSTM text decoder), a 3-class abstractness
classifier trained under three regimes, and the evaluation harness.
"""

__version__ = "0.1.0"
