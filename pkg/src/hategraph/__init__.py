"""Toolkit for classifying social-media users as hate-mongers.

Combines per-post hate scores with the follower graph: fixed-threshold
counting, relational (ego-network) aggregation, distributional score
histograms, a DeGroot diffusion baseline, and random-walk node embeddings,
evaluated under stratified 5-fold cross-validation.
"""

from .errors import DataFormatError, DegenerateDataError
from .version import TOOLKIT_VERSION as __version__

__all__ = ["DataFormatError", "DegenerateDataError", "__version__"]
