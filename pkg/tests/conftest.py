import numpy as np
import pytest

from mftube.ifs import SelfSimilarSystem, cantor_system, system_from_dict


@pytest.fixture(scope="session")
def cm() -> SelfSimilarSystem:
    """Middle-thirds Cantor system with equal weights."""
    return cantor_system()


@pytest.fixture(scope="session")
def half_third() -> SelfSimilarSystem:
    """Non-arithmetic system with ratios (1/2, 1/3)."""
    return system_from_dict({
        "dimension": 1,
        "maps": [{"ratio": 0.5, "translation": [0.0]},
                 {"ratio": 1 / 3, "translation": [2 / 3]}],
        "probabilities": [0.5, 0.5],
    })


@pytest.fixture(scope="session")
def quarter_eighth() -> SelfSimilarSystem:
    """Arithmetic system with ratios (1/4, 1/8): u = log 2, k = (2, 3)."""
    return system_from_dict({
        "dimension": 1,
        "maps": [{"ratio": 0.25, "translation": [0.0]},
                 {"ratio": 0.125, "translation": [0.875]}],
        "probabilities": [0.5, 0.5],
    })


def random_system(rng: np.random.Generator, n_maps: int = 2,
                  d: int = 1) -> SelfSimilarSystem:
    """A random separated 1-D system: maps placed on disjoint subintervals
    of [0, 1] with ratios small enough to keep images disjoint."""
    assert d == 1
    ratios = rng.uniform(0.15, 1.0 / (n_maps + 1), size=n_maps)
    probs = rng.uniform(0.2, 1.0, size=n_maps)
    probs = probs / probs.sum()
    # anchor the images at evenly spaced slots so they never overlap
    slots = np.linspace(0.0, 1.0 - 1.0 / n_maps, n_maps)
    maps = [{"ratio": float(r), "translation": [float(s)]}
            for r, s in zip(ratios, slots)]
    maps[-1]["translation"] = [1.0 - float(ratios[-1])]
    return system_from_dict({
        "dimension": 1,
        "maps": maps,
        "probabilities": [float(p) for p in probs],
    })
