"""Corpus handling: annotation parsing, attribute encoding, ROI cropping, registry."""

from .attributes import (
    ATTRIBUTE_NODES,
    MARGIN_SLOTS,
    NUM_NODES,
    SHAPE_SLOTS,
    SLOT_INDEX,
    VOCAB_VERSION,
    encode_attribute_vector,
    validate_attribute_vector,
)
from .overlay import (
    LesionAnnotation,
    Outline,
    parse_overlay,
    parse_overlay_file,
    serialize_annotations,
)
from .registry import (
    DEFAULT_RATIOS,
    MANIFEST_COLUMNS,
    DomainRegistry,
    SampleRecord,
    load_test_list,
    patient_key,
    patient_split,
    published_test_cases,
    split_registry,
    write_manifest,
)
from .rois import PATCH_SIZE, MarginPolicy, crop_box, crop_rois, export_patches, resize_patch

__all__ = [
    "ATTRIBUTE_NODES",
    "DEFAULT_RATIOS",
    "DomainRegistry",
    "LesionAnnotation",
    "MANIFEST_COLUMNS",
    "MARGIN_SLOTS",
    "MarginPolicy",
    "NUM_NODES",
    "Outline",
    "PATCH_SIZE",
    "SHAPE_SLOTS",
    "SLOT_INDEX",
    "SampleRecord",
    "VOCAB_VERSION",
    "crop_box",
    "crop_rois",
    "export_patches",
    "encode_attribute_vector",
    "load_test_list",
    "parse_overlay",
    "parse_overlay_file",
    "patient_key",
    "patient_split",
    "published_test_cases",
    "resize_patch",
    "serialize_annotations",
    "split_registry",
    "validate_attribute_vector",
    "write_manifest",
]
