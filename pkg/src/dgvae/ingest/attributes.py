"""Attribute vocabulary and the 12-slot binary target encoding.

The node order is fixed and versioned; checkpoints and manifests carry it
so downstream consumers can detect drift.
"""

import numpy as np

from ..errors import ValidationError

VOCAB_VERSION = 1

ATTRIBUTE_NODES = (
    "circle",
    "oval",
    "irregular",
    "circumscribed",
    "obscured",
    "ill-defined",
    "is-lobulated",
    "not-lobulated",
    "is-spiculated",
    "not-spiculated",
    "benign",
    "malignant",
)

NUM_NODES = len(ATTRIBUTE_NODES)
SHAPE_SLOTS = ("circle", "oval", "irregular")
MARGIN_SLOTS = ("circumscribed", "obscured", "ill-defined")
SLOT_INDEX = {name: i for i, name in enumerate(ATTRIBUTE_NODES)}


def encode_attribute_vector(annotation):
    """Map a mass annotation to the 12-slot binary target vector."""
    if annotation.lesion_type != "mass":
        raise ValidationError(f"attribute encoding is defined for masses, not {annotation.lesion_type!r}")
    g = np.zeros(NUM_NODES, dtype=np.int64)
    if annotation.shape is not None:
        if annotation.shape not in SHAPE_SLOTS:
            raise ValidationError(f"unknown shape {annotation.shape!r}; expected one of {SHAPE_SLOTS}")
        g[SLOT_INDEX[annotation.shape]] = 1
    if annotation.margin is not None and annotation.margin != "spiculated":
        if annotation.margin not in MARGIN_SLOTS:
            raise ValidationError(
                f"unknown margin {annotation.margin!r}; expected one of "
                f"{MARGIN_SLOTS + ('spiculated',)}"
            )
        g[SLOT_INDEX[annotation.margin]] = 1
    g[SLOT_INDEX["is-lobulated" if annotation.lobulated else "not-lobulated"]] = 1
    g[SLOT_INDEX["is-spiculated" if annotation.spiculated else "not-spiculated"]] = 1
    if annotation.pathology not in ("benign", "malignant"):
        raise ValidationError(f"pathology must be benign or malignant, got {annotation.pathology!r}")
    g[SLOT_INDEX[annotation.pathology]] = 1
    validate_attribute_vector(g)
    return g


def validate_attribute_vector(g):
    """Check the structural constraints of a 12-slot target vector."""
    g = np.asarray(g)
    if g.shape != (NUM_NODES,) or not np.isin(g, (0, 1)).all():
        raise ValidationError(f"expected a binary vector of length {NUM_NODES}")
    if sum(g[SLOT_INDEX[s]] for s in SHAPE_SLOTS) > 1:
        raise ValidationError("at most one shape slot may be set")
    if sum(g[SLOT_INDEX[s]] for s in MARGIN_SLOTS) > 1:
        raise ValidationError("at most one margin slot may be set")
    if g[SLOT_INDEX["is-lobulated"]] + g[SLOT_INDEX["not-lobulated"]] != 1:
        raise ValidationError("exactly one lobulation slot must be set")
    if g[SLOT_INDEX["is-spiculated"]] + g[SLOT_INDEX["not-spiculated"]] != 1:
        raise ValidationError("exactly one spiculation slot must be set")
    if g[SLOT_INDEX["benign"]] + g[SLOT_INDEX["malignant"]] != 1:
        raise ValidationError("exactly one of benign/malignant must be set")
    return g
