"""Multi-domain sample registry with patient-wise splitting.

Datasets are registered by name and receive contiguous domain indices.
A patient's samples never span splits; the published test-case list, when
supplied, pins those cases to the test split before the remaining patients
are shuffled.
"""

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError
from ..rng import stream
from .attributes import ATTRIBUTE_NODES

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_RATIOS = (8, 1, 1)
CASE_ID_PATTERN = re.compile(r"^(benign|cancer)_\d{2}_case\d{4}$")

MANIFEST_COLUMNS = (
    "case_id",
    "patient_id",
    "dataset",
    "domain_index",
    "split",
    "label",
    *(f"g_{name}" for name in ATTRIBUTE_NODES),
    "patch_path",
)


@dataclass
class SampleRecord:
    case_id: str
    patient_id: str
    dataset: str
    label: int
    attributes: object = None
    patch_path: str = ""


@dataclass
class DomainRegistry:
    datasets: dict = field(default_factory=dict)

    def add_dataset(self, name, records):
        if name in self.datasets:
            raise ValidationError(f"dataset {name!r} already registered")
        self.datasets[name] = list(records)

    @property
    def names(self):
        return list(self.datasets)

    def domain_index(self, name):
        """Contiguous 1-based domain index in registration order."""
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise ValidationError(f"unknown dataset {name!r}") from None

    def patients(self, name):
        seen = {}
        for record in self.datasets[name]:
            seen.setdefault(record.patient_id, []).append(record)
        return seen


def patient_key(case_id):
    """Collapse a volume-qualified case id to its patient: benign_12_case1889 -> benign_case1889."""
    match = re.match(r"^(benign|cancer)_\d{2}_(case\d{4})$", case_id)
    if match:
        return f"{match.group(1)}_{match.group(2)}"
    return case_id


def load_test_list(text):
    """Parse the published test-case list into a set of case ids."""
    seen = set()
    for token in text.split():
        if not CASE_ID_PATTERN.match(token):
            raise ValidationError(f"unknown test-list entry {token!r}")
        if token in seen:
            raise ValidationError(f"duplicate test-list entry {token!r}")
        seen.add(token)
    return frozenset(seen)


def published_test_cases():
    """The packaged test-division list for the public mammogram corpus."""
    path = Path(__file__).parent / "ddsm_test_cases.txt"
    return load_test_list(path.read_text(encoding="utf-8"))


def patient_split(patients, ratios=DEFAULT_RATIOS, seed=0, dataset="", pinned_test=()):
    """Partition patient ids into train/val/test.

    Deterministic per (seed, dataset); patients owning a pinned case go to
    the test split and the rest are shuffled into the remaining splits in
    proportion.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValidationError(f"bad split ratios {ratios}")
    patients = sorted(patients)
    pinned_patients = {patient_key(c) for c in pinned_test}
    assignment = {}
    remaining = []
    for patient in patients:
        if patient in pinned_patients:
            assignment[patient] = "test"
        else:
            remaining.append(patient)
    rng = stream(seed, "patient-split", dataset)
    order = [remaining[i] for i in rng.permutation(len(remaining))]
    # a pinned list consumes the whole test share; the rest splits train/val
    weights = (ratios[0], ratios[1], 0) if pinned_patients else tuple(ratios)
    total = sum(weights)
    n = len(order)
    n_train = n * weights[0] // total
    n_val = n * weights[1] // total
    for patient in order[:n_train]:
        assignment[patient] = "train"
    for patient in order[n_train : n_train + n_val]:
        assignment[patient] = "val"
    for patient in order[n_train + n_val :]:
        assignment[patient] = "train" if pinned_patients else "test"
    return assignment


def split_registry(registry, ratios=DEFAULT_RATIOS, seed=0, pinned_test_by_dataset=None):
    """Per-dataset patient-wise split; returns {dataset: {patient: split}}."""
    pinned_test_by_dataset = pinned_test_by_dataset or {}
    out = {}
    for name in registry.names:
        out[name] = patient_split(
            registry.patients(name),
            ratios=ratios,
            seed=seed,
            dataset=name,
            pinned_test=pinned_test_by_dataset.get(name, ()),
        )
    return out


def write_manifest(registry, splits, path):
    """UTF-8 CSV manifest with the documented fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for name in registry.names:
            domain = registry.domain_index(name)
            for record in registry.datasets[name]:
                g = record.attributes
                g_cols = ["" for _ in ATTRIBUTE_NODES] if g is None else [int(v) for v in g]
                writer.writerow(
                    [
                        record.case_id,
                        record.patient_id,
                        name,
                        domain,
                        splits[name][record.patient_id],
                        record.label,
                        *g_cols,
                        record.patch_path,
                    ]
                )
    return path
