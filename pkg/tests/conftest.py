import numpy as np
import pytest

from csdetect.posteriors import LanguageClass, PhoneInventory

ACCEPTANCE_RESULTS = []

L1, L2, SIL = LanguageClass.L1, LanguageClass.L2, LanguageClass.SIL


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def inventory():
    """aa, oo (fry); k (nld); sil."""
    return PhoneInventory(
        (("aa", L1), ("oo", L1), ("k", L2), ("sil", SIL)),
        ("fry", "nld"),
    )


@pytest.fixture
def tiny_inventory():
    return PhoneInventory((("aa", L1), ("k", L2), ("sil", SIL)), ("fry", "nld"))


def random_inventory(rng, n_phones):
    """Inventory of ``n_phones`` >= 3 phones with every class present."""
    classes = np.concatenate([[0, 1, 2], rng.integers(0, 3, n_phones - 3)])
    rng.shuffle(classes)
    phones = tuple((f"p{j}", LanguageClass(int(c))) for j, c in enumerate(classes))
    return PhoneInventory(phones, ("fry", "nld"))
