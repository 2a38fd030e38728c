"""ROI extraction: crop annotated lesions and resize to the network input size.

Horizontal flips are a training-time augmentation and are deliberately not
applied here.
"""

from dataclasses import dataclass

import cv2
import numpy as np

from ..errors import ValidationError

PATCH_SIZE = 224


@dataclass(frozen=True)
class MarginPolicy:
    """How far to grow an annotation box before cropping."""

    fraction: float = 0.0  # padding per side, relative to box extent
    minimum: int = 0  # absolute padding floor in pixels

    def expand(self, box, image_shape):
        row0, col0, row1, col1 = box
        pad_r = max(int(round(self.fraction * (row1 - row0 + 1))), self.minimum)
        pad_c = max(int(round(self.fraction * (col1 - col0 + 1))), self.minimum)
        return (
            max(row0 - pad_r, 0),
            max(col0 - pad_c, 0),
            min(row1 + pad_r, image_shape[0] - 1),
            min(col1 + pad_c, image_shape[1] - 1),
        )


def resize_patch(patch, size=PATCH_SIZE):
    if patch.shape == (size, size):
        return patch.copy()
    return cv2.resize(patch.astype(np.float32), (size, size), interpolation=cv2.INTER_LINEAR)


def crop_box(image, box, size=PATCH_SIZE):
    """Crop an inclusive (row0, col0, row1, col1) box and resize."""
    row0, col0, row1, col1 = box
    if row1 <= row0 or col1 <= col0:
        raise ValidationError(f"degenerate crop box {box}: needs extent >= 2 pixels per axis")
    if row0 < 0 or col0 < 0 or row1 >= image.shape[0] or col1 >= image.shape[1]:
        raise ValidationError(f"crop box {box} exceeds image shape {image.shape}")
    return resize_patch(image[row0 : row1 + 1, col0 : col1 + 1], size)


def crop_rois(image, annotations, margin=MarginPolicy(), size=PATCH_SIZE):
    """One resized patch per annotation, using each boundary outline's box."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValidationError("expected a single-channel image")
    patches = []
    for ann in annotations:
        outline = ann.boundary
        if outline is None:
            raise ValidationError(f"annotation {ann.index} of {ann.case_id!r} has no BOUNDARY outline")
        box = margin.expand(outline.bounding_box(), image.shape)
        patches.append(crop_box(image, box, size))
    return patches


def export_patches(image, annotations, out_dir, margin=MarginPolicy(), size=PATCH_SIZE):
    """Crop every mass annotation of one case into out_dir as .npy patches.

    Returns SampleRecords carrying the patch path, the 12-slot target
    vector, and the benign/malignant label, ready for the registry.
    """
    from pathlib import Path

    from .attributes import encode_attribute_vector
    from .registry import SampleRecord, patient_key

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    masses = [ann for ann in annotations if ann.lesion_type == "mass"]
    patches = crop_rois(image, masses, margin=margin, size=size)
    records = []
    for ann, patch in zip(masses, patches):
        name = f"{ann.case_id}_abn{ann.index}.npy"
        np.save(out_dir / name, patch.astype(np.float32))
        records.append(
            SampleRecord(
                case_id=ann.case_id,
                patient_id=patient_key(ann.case_id),
                dataset=out_dir.name,
                label=int(ann.pathology == "malignant"),
                attributes=encode_attribute_vector(ann),
                patch_path=str(out_dir / name),
            )
        )
    return records
