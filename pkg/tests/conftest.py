import numpy as np
import pytest
from hypothesis import settings

from blinktrack.codebook import BlinkDictionary
from blinktrack.harness import default_dictionary
from blinktrack.model import DetectionFrame

F = 60.0


@pytest.fixture(scope="session")
def dictionary() -> BlinkDictionary:
    return default_dictionary()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def frame(k: int, *points: tuple[float, float], f: float = F) -> DetectionFrame:
    """Detection frame ``k`` holding ``points`` (timestamps at k / f)."""
    return DetectionFrame(k, k / f, tuple((float(x), float(y)) for x, y in points))


# fixed example streams keep the suite reproducible run to run
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class Criterion:
    """Context manager that records PASS/FAIL for one acceptance criterion.

    Set ``detail`` inside the block to attach the measured numbers.
    """

    def __init__(self, number: int, title: str) -> None:
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self) -> "Criterion":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        ok = exc_type is None
        if not ok and not self.detail:
            self.detail = f"{exc_type.__name__}: {exc}".splitlines()[0]
        ACCEPTANCE[self.number] = (self.title, ok, self.detail)
        return False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
