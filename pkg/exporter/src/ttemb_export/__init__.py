"""Checkpoint embedding extraction into the EMB1 interchange format."""

from .exporter import ExportManifest, ModelNotFound, NotAnEmbedding, export

__version__ = "0.1.0"

__all__ = ["ExportManifest", "ModelNotFound", "NotAnEmbedding", "export"]
