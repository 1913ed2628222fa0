import json

import numpy as np
import pytest

from cohortkit import (
    CaseIndex,
    SynthConfig,
    desk_catalog,
    generate_cases,
    generate_corpus,
    load_catalog,
)


@pytest.fixture(scope="session")
def catalog():
    return desk_catalog()


@pytest.fixture(scope="session")
def toy_catalog():
    """Two fields sharing the value 'tumor' plus one numeric field."""
    manifest = {
        "version": "toy-1",
        "fields": [
            {
                "name": "cases.samples.tissue_type",
                "kind": "categorical",
                "values": ["tumor", "normal"],
                "range": None,
                "group": "samples",
            },
            {
                "name": "cases.samples.tumor_descriptor",
                "kind": "categorical",
                "values": ["tumor", "metastatic", "recurrence"],
                "range": None,
                "group": "samples",
            },
            {
                "name": "cases.diagnoses.age_at_diagnosis",
                "kind": "numeric",
                "values": None,
                "range": {"min": 0, "max": 100, "unit": "years"},
                "group": "diagnosis",
            },
        ],
    }
    return load_catalog(json.dumps(manifest))


@pytest.fixture(scope="session")
def synth_filters(catalog):
    return generate_corpus(SynthConfig(seed=5, target_count=300), catalog)


@pytest.fixture(scope="session")
def case_index(catalog, synth_filters):
    records = generate_cases(catalog, 2_000, seed=99, seed_filters=synth_filters[:150])
    return CaseIndex(records, catalog)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
