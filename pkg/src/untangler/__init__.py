"""Untangle fine-grained IDE change logs into task clusters.

The pipeline: record change events per development session, compute pairwise
"voter" features, train a classifier that scores whether two changes belong
to the same task, agglomerate the scores into a dendrogram, cut it, and
compare the resulting clusters against what the developer expected.
"""

__version__ = "0.1.0"

from untangler.events import ChangeEvent, Clustering, SessionLog, TestRunEvent

__all__ = [
    "ChangeEvent",
    "TestRunEvent",
    "SessionLog",
    "Clustering",
    "__version__",
]
