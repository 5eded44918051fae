"""Joint entity-level relation extraction from documents."""

from .config import Config, ConfigError
from .corpus import Document, EntityCluster, IngestionError, Mention, RelationTriple, Span, load_docred
from .inference import DocumentPrediction, Extractor
from .model import JointModel

__all__ = [
    "Config", "ConfigError", "Document", "DocumentPrediction", "EntityCluster", "Extractor", "IngestionError",
    "JointModel", "Mention", "RelationTriple", "Span", "load_docred",
]
__version__ = "0.1.0"
