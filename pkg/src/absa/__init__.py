"""Aspect-based sentiment analysis toolkit.

Pipeline pieces: corpus ingestion (absa.corpus), tokenization and vocabulary
(absa.textproc), aspect encodings and vectorizers (absa.encode), six classical
classifiers (absa.classic), the deep memory network (absa.memnet), stratified
evaluation (absa.evaluation), archives (absa.persist), and the CLI (absa.cli).
"""

__version__ = "0.1.0"

from .corpus import Dataset, Instance, parse_dataset, shuffle_split, write_dataset
from .pipeline import PipelineConfig, build_pipeline, make_config

__all__ = [
    "Dataset",
    "Instance",
    "PipelineConfig",
    "build_pipeline",
    "make_config",
    "parse_dataset",
    "shuffle_split",
    "write_dataset",
    "__version__",
]
