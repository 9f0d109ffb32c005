import numpy as np
import pytest

from fewbody import asym, model


@pytest.fixture(scope="session")
def reference_spec():
    return model.make_reference_model()


@pytest.fixture(scope="session")
def reference_rho(reference_spec):
    return model.pair_spectral_radius(reference_spec)


@pytest.fixture(scope="session")
def reference_energies(reference_rho):
    return list(np.geomspace(2.0 * reference_rho, 200.0 * reference_rho, 5))


@pytest.fixture(scope="session")
def reference_sweep(reference_spec, reference_energies):
    return asym.asym_error_sweep(
        reference_spec, reference_energies, eps=model.REFERENCE_EPS
    )


def column(report, name):
    return [row[report.columns.index(name)] for row in report.rows]
