"""Reference specialist backend for the annotation pipeline.

Serves a text classifier behind the three-endpoint wire protocol
(health / predict / refine). The default toy engine is a hashed bag-of-words
multinomial logistic regression, deterministic per seed, so the full refine
loop is verifiable without accelerators.
"""
from .engine import BUCKETS, ToyEngine, WorkerError, featurize
from .server import WorkerServer

__version__ = "0.1.0"

__all__ = ["BUCKETS", "ToyEngine", "WorkerError", "WorkerServer", "featurize"]
