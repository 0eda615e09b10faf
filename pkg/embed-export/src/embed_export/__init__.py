"""Offline per-token vector export for the shiftpair extractor."""

from .corpus import read_tokenized
from .encoders import HuggingFaceEncoder, RandomEncoder, TokenAlignmentError
from .writer import write_vector_file

__version__ = "0.1.0"

__all__ = [
    "HuggingFaceEncoder",
    "RandomEncoder",
    "TokenAlignmentError",
    "read_tokenized",
    "write_vector_file",
]
