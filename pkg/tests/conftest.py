import json
import pathlib

import numpy as np
import pytest

DATA = pathlib.Path(__file__).parent / "data" / "oracle_values.json"


@pytest.fixture(scope="session")
def oracle():
    return json.loads(DATA.read_text())


def oracle_matrix(entry):
    A = np.array(entry["re"]) + 1j * np.array(entry["im"])
    return A if np.any(entry["im"]) else A.real


def random_poly(rng, degree, complex_=True):
    from h1mult import AnalyticPoly

    c = rng.normal(size=degree + 1)
    if complex_:
        c = c + 1j * rng.normal(size=degree + 1)
    return AnalyticPoly.from_dense(c)
