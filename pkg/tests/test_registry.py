import csv

import numpy as np
import pytest

from dgvae.errors import ValidationError
from dgvae.ingest import (
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


def records(name, n_patients, per_patient=2):
    out = []
    for p in range(n_patients):
        pid = f"{name}_patient{p:03d}"
        for r in range(per_patient):
            out.append(
                SampleRecord(
                    case_id=f"{pid}_roi{r}",
                    patient_id=pid,
                    dataset=name,
                    label=p % 2,
                    attributes=np.zeros(12, dtype=int),
                )
            )
    return out


class TestPatientSplit:
    def test_ten_patients_split_exactly(self):
        patients = [f"p{i}" for i in range(10)]
        assignment = patient_split(patients, seed=0)
        counts = {s: list(assignment.values()).count(s) for s in ("train", "val", "test")}
        assert counts == {"train": 8, "val": 1, "test": 1}

    def test_partition_property_over_seeds(self):
        patients = [f"p{i}" for i in range(37)]
        for seed in range(25):
            assignment = patient_split(patients, seed=seed)
            assert sorted(assignment) == sorted(patients)
            assert set(assignment.values()) <= {"train", "val", "test"}

    def test_deterministic_per_seed(self):
        patients = [f"p{i}" for i in range(23)]
        assert patient_split(patients, seed=7) == patient_split(patients, seed=7)
        assert patient_split(patients, seed=7) != patient_split(patients, seed=8)

    def test_pinned_cases_land_in_test(self):
        patients = [patient_key(f"benign_01_case{i:04d}") for i in range(10)]
        pinned = ("benign_01_case0001", "benign_01_case0003")
        assignment = patient_split(patients, seed=3, pinned_test=pinned)
        assert assignment[patient_key("benign_01_case0001")] == "test"
        assert assignment[patient_key("benign_01_case0003")] == "test"
        in_test = [p for p in patients if assignment[p] == "test"]
        assert len(in_test) == 2  # nothing else leaks into test

    def test_bad_ratios_rejected(self):
        with pytest.raises(ValidationError):
            patient_split(["a", "b"], ratios=(1, 1), seed=0)


class TestTestList:
    def test_duplicate_entry_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            load_test_list("benign_01_case0001 benign_01_case0001")

    def test_unknown_token_rejected(self):
        with pytest.raises(ValidationError, match="unknown"):
            load_test_list("benign_1_case1 benign_01_case0001")

    def test_empty_text_gives_empty_set(self):
        assert load_test_list("") == frozenset()

    def test_published_list_parses_completely(self):
        cases = published_test_cases()
        assert len(cases) == 75
        assert "benign_12_case1889" in cases
        assert "cancer_12_case4108" in cases

    def test_patient_key_collapses_volume(self):
        assert patient_key("benign_12_case1889") == "benign_case1889"
        assert patient_key("free-form-id") == "free-form-id"


class TestRegistry:
    def test_contiguous_domain_indices(self):
        registry = DomainRegistry()
        registry.add_dataset("hospital_a", records("a", 4))
        registry.add_dataset("hospital_b", records("b", 4))
        assert registry.domain_index("hospital_a") == 1
        assert registry.domain_index("hospital_b") == 2
        with pytest.raises(ValidationError):
            registry.domain_index("hospital_c")

    def test_duplicate_dataset_rejected(self):
        registry = DomainRegistry()
        registry.add_dataset("x", records("x", 2))
        with pytest.raises(ValidationError):
            registry.add_dataset("x", records("x", 2))

    def test_patient_samples_never_span_splits(self):
        registry = DomainRegistry()
        registry.add_dataset("a", records("a", 20, per_patient=3))
        splits = split_registry(registry, seed=5)
        for record in registry.datasets["a"]:
            assert splits["a"][record.patient_id] in ("train", "val", "test")
        # every sample of a patient lands in the same split by construction
        by_patient = {}
        for record in registry.datasets["a"]:
            by_patient.setdefault(record.patient_id, set()).add(splits["a"][record.patient_id])
        assert all(len(s) == 1 for s in by_patient.values())

    def test_manifest_has_documented_columns(self, tmp_path):
        registry = DomainRegistry()
        registry.add_dataset("a", records("a", 5))
        splits = split_registry(registry, seed=1)
        path = write_manifest(registry, splits, tmp_path / "manifest.csv")
        with path.open(encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        assert tuple(header) == MANIFEST_COLUMNS
        assert len(rows) == 10
        assert rows[0][2] == "a"
        assert rows[0][3] == "1"
        assert rows[0][4] in ("train", "val", "test")
