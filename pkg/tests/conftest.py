"""Shared fixtures: presentations with known orders and a scratch cache"""

import numpy as np
import pytest

from services.cache_manager import CacheManager
from services.presentations import Presentation, make_hm
from services.words import Word

a, b = Word.generator("a"), Word.generator("b")

# Presentation, order of the group
CLASSICAL_GROUPS = {
    "cyclic-5": (Presentation(("a",), [a ** 5], name="C5"), 5),
    "symmetric-3": (Presentation(("a", "b"), [a ** 2, b ** 3, (a * b) ** 2], name="S3"), 6),
    "quaternion-8": (Presentation(("a", "b"), [a ** 4, a ** 2 * b ** -2, b.inverse() * a * b * a],
                                  name="Q8"), 8),
    "alternating-4": (Presentation(("a", "b"), [a ** 2, b ** 3, (a * b) ** 3], name="A4"), 12),
    "sl2-3": (Presentation(("a", "b"), [a ** 3 * b ** -3, (a * b) ** 2 * a ** -3],
                           name="SL2(3)"), 24),
}

COROLLARY_ORDERS = {3: 24, 5: 120, 7: 336, 9: 648, 11: 1320, 13: 2184, 15: 2880}


@pytest.fixture
def h2():
    return make_hm(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cache(tmp_path):
    return CacheManager(str(tmp_path / "cache"))
