"""Topic clusters from hashtag co-occurrence networks.

Builds the thresholded co-occurrence graph, detects topic clusters by
greedy modularity maximization, quantifies user and co-tag topical
diversity by entropy over clusters, and reproduces the early-window
virality prediction and social-influence analyses on synthetic corpora
with planted ground truth.
"""

__version__ = "0.1.0"
