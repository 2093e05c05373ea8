import numpy as np
import pytest

from qsa_lab.instances import generate_ising_chain, two_state

LN2 = float(np.log(2.0))


@pytest.fixture(scope="session")
def inst2():
    return two_state()


@pytest.fixture(scope="session")
def ising3():
    return generate_ising_chain(3, [1.0, 1.0], name="ising_n3")


@pytest.fixture(scope="session")
def ising6():
    return generate_ising_chain(6, [1.0] * 5, name="ising_n6")
