"""Chain-of-thought distillation tooling for text style transfer.

Subpackages cover the pipeline end to end: few-shot prompt rendering,
a record/replay generation backend, completion parsing, dataset
curation and export, a reference-compatible BLEU scorer, an evaluation
harness, and a human-rating service.
"""

__version__ = "0.1.0"
