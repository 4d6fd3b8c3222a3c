import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maharam.weights import Schedule  # noqa: E402

# k_max = 2 schedules that pass the inequality verifier on their whole range
TOY_SCHEDULES = {
    "eta2-4096": Schedule.table([2, 4096], [Fraction(1, 2), Fraction(1, 4)]),
    "eta1-8": Schedule.table([1, 8], [Fraction(1, 2), Fraction(1, 2)]),
    "eta1-16": Schedule.table([1, 16], [Fraction(1), Fraction(1, 3)]),
    "eta2-64": Schedule.table([2, 64], [Fraction(1, 3), Fraction(1, 3)]),
}

# fails inequality 4, so the closed form need not hold
UNBALANCED = Schedule.table([2, 4], [Fraction(1), Fraction(1)])

# increasing alpha; fails inequality 1
BROKEN = Schedule.table([2, 4], [Fraction(1, 8), Fraction(1, 2)])


@pytest.fixture(scope="session")
def talagrand():
    return Schedule.talagrand()
