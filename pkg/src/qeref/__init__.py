"""Refined word-level translation quality estimation.

Turns OK/BAD word-level QE output into operation-level REP/INS/DEL tags
with word-level correspondences, via extended word alignment and
source-gap correspondence extraction.
"""

__version__ = "0.1.0"

from .core import (
    AlignmentLink,
    CorrespondenceSet,
    OriginalTag,
    RefinedTag,
    SentencePair,
    SourceGapLink,
    TagAssignment,
    validate_pair,
)

__all__ = [
    "AlignmentLink",
    "CorrespondenceSet",
    "OriginalTag",
    "RefinedTag",
    "SentencePair",
    "SourceGapLink",
    "TagAssignment",
    "validate_pair",
    "__version__",
]
