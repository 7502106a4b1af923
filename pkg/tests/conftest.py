import numpy as np
import pytest

from spdc1d.constants import CONSTANTS
from spdc1d.linear import PumpSpec
from spdc1d.materials import constant_material, sellmeier_material
from spdc1d.structure import StructureSpec

LAMBDA_P = 400e-9
OMEGA_P0 = 2 * np.pi * CONSTANTS.c / LAMBDA_P

GAN_TERMS = [(1.75, 0.256**2), (4.1, 17.86**2)]
ALN_TERMS = [(1.3786, 0.1715**2), (3.861, 15.03**2)]
D_EFF = 4e-12


@pytest.fixture(scope="session")
def gan():
    return sellmeier_material(
        "GaN", 3.60, GAN_TERMS, chi2={("y", "x", "y"): D_EFF},
        window_um=(0.30, 9.0),
    )


@pytest.fixture(scope="session")
def gan_linear():
    return sellmeier_material("GaN0", 3.60, GAN_TERMS, window_um=(0.30, 9.0))


@pytest.fixture(scope="session")
def aln():
    return sellmeier_material("AlN", 3.1399, ALN_TERMS, window_um=(0.22, 9.0))


@pytest.fixture(scope="session")
def air():
    return constant_material("air", 1.0)


@pytest.fixture(scope="session")
def pump400():
    return PumpSpec.from_wavelength(LAMBDA_P, 7e-9, 1e3,
                                    polarization="y", side="F")


@pytest.fixture(scope="session")
def stack4(gan, aln, air):
    return StructureSpec(
        ((gan, 60e-9, 1), (aln, 90e-9, 1), (gan, 75e-9, 1), (aln, 50e-9, 1)),
        air, air,
    )


@pytest.fixture(scope="session")
def stack20(gan, aln, air):
    layers = ((gan, 60e-9, 1), (aln, 12e-9, 1)) * 10
    return StructureSpec(layers, air, air)
