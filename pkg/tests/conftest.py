import pytest

from fockforge.dense import enumerate_sector
from fockforge.fock import Cutoffs
from fockforge.library import builtin, resolution_cutoffs


def lf_sector(name, K):
    spec = builtin(name, cutoffs=resolution_cutoffs(name, K))
    return spec, enumerate_sector(spec.cutoffs, spec.particle_types())


def et_sector(name, lam, W=2, I=3, total=(0,)):
    spec = builtin(name, cutoffs=Cutoffs.equal_time(lam, W, I))
    return spec, enumerate_sector(spec.cutoffs, spec.particle_types(), total=total)


@pytest.fixture
def particles():
    from fockforge.model import STANDARD_PARTICLES
    return STANDARD_PARTICLES
