"""Omnidirectional (360 degree) single-object tracking toolkit.

Sphere geometry, bounding field-of-view regions, mask-derived annotations,
seam-aware metrics, an OPE harness driving external trackers and a
synthetic sequence generator.
"""
from .annotations import REPRESENTATIONS, Bbox, Bfov, FrameAnnotation
from .errors import AdapterError, DomainError, OmniError, ValidationError
from .sphere import ErpDims

__version__ = "0.1.0"

__all__ = [
    "REPRESENTATIONS", "Bbox", "Bfov", "FrameAnnotation", "ErpDims",
    "OmniError", "DomainError", "ValidationError", "AdapterError",
]
