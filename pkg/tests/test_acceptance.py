"""Acceptance criteria 1-11, one test each.

Every criterion writes its measurements to CSV under a session directory.
Criterion 11 reruns the producers of 1-10 into a second directory and
compares the files byte for byte. A PASS/FAIL line per criterion is printed
in the terminal summary.
"""

import pytest

from acceptance_criteria import CRITERIA


@pytest.fixture(scope="session")
def first_run(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance_first")


def _record(results, k, ok, detail):
    results[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, first_run, acceptance_results):
    ok, detail = CRITERIA[k](first_run)
    _record(acceptance_results, k, ok, detail)
    assert ok, detail


def test_criterion_11_reproducible(first_run, tmp_path_factory, acceptance_results):
    second = tmp_path_factory.mktemp("acceptance_second")
    for k, fn in CRITERIA.items():
        if not any(first_run.glob(f"criterion_{k}*")):
            fn(first_run)
        fn(second)
    names = sorted(str(p.relative_to(first_run)) for p in first_run.rglob("*") if p.is_file())
    again = sorted(str(p.relative_to(second)) for p in second.rglob("*") if p.is_file())
    differ = [n for n in names if (first_run / n).read_bytes() != (second / n).read_bytes()] if names == again else names
    ok = not differ and len(names) > 0
    _record(acceptance_results, 11, ok,
            f"{len(names)} output files from criteria 1-10 rerun, {len(differ)} differ byte for byte")
    assert ok, differ[:10]
