import numpy as np
import pytest

from nklon.landscape import ModelSpec, NkInstance, generate_instance


def make_instance(tables, links, model="NKq", param=2, neighborhood="random", seed=0):
    """Instance from explicit tables/links (bypasses the generator)."""
    tables = np.asarray(tables, dtype=np.int64)
    links = np.asarray(links, dtype=np.int64).reshape(tables.shape[0], -1)
    spec = ModelSpec(model, tables.shape[0], links.shape[1], param, neighborhood, seed)
    return NkInstance(spec, links, tables)


def constant_instance(n=6, k=2):
    return generate_instance(ModelSpec("NKp", n, k, 1.0, "random", 0))


def distinct_instance(n, k, seed):
    """A standard NK instance whose 2**n fitness values are verified distinct."""
    while True:
        inst = generate_instance(ModelSpec("NK", n, k, None, "random", seed))
        if len(np.unique(inst.fitness_table)) == inst.size:
            return inst
        seed += 1000


@pytest.fixture
def constant():
    return constant_instance()


_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
