"""Shared fixtures.

The 14-bus artifacts (10k-sample dataset, trained cost model) are
expensive, so they are built once per session and shared by every test
that needs them.  Seeds come from the shipped experiment config so the
numbers here are the same ones the CLI pipeline produces.
"""

from pathlib import Path

import pytest

from uc_screen import (
    LoadRegion,
    TrainConfig,
    build_formulation,
    derive_seeds,
    generate_dataset,
    load_case_file,
    mlp_train,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

MASTER_SEED = 2024
SEEDS = derive_seeds(MASTER_SEED)


@pytest.fixture(scope="session")
def case3():
    return load_case_file(FIXTURES / "case3.json")


@pytest.fixture(scope="session")
def form3(case3):
    return build_formulation(case3)


@pytest.fixture(scope="session")
def case14():
    return load_case_file(FIXTURES / "case14.json")


@pytest.fixture(scope="session")
def form14(case14):
    return build_formulation(case14)


@pytest.fixture(scope="session")
def region14_half(case14):
    return LoadRegion(nominal=case14.nominal_load, variation=0.5)


@pytest.fixture(scope="session")
def dataset14(form14, region14_half):
    # ~10k MIP solves; takes a minute or two but is shared session-wide
    return generate_dataset(form14, region14_half, 10_000,
                            seed=SEEDS["dataset"])


@pytest.fixture(scope="session")
def trained14(dataset14):
    return mlp_train(dataset14, TrainConfig(seed=SEEDS["train"]))


@pytest.fixture(scope="session")
def model14(trained14):
    model, report = trained14
    assert report.val_relative_error < 0.05, "cost model failed to converge"
    return model


@pytest.fixture(scope="session")
def train_report14(trained14):
    return trained14[1]
