import math

import pytest

from gamma_fdcalc.configspace import Window
from gamma_fdcalc.verify import make_report
from gamma_fdcalc.suites import (
    KINDS,
    SUITE_NAMES,
    SUITES,
    CheckResult,
    Context,
    SuiteResult,
    flaky_budget,
    resolve,
    run_suites,
    summarize,
)


def test_catalog():
    assert "all" in SUITE_NAMES
    for name, checks in SUITES.items():
        assert checks, name
        ids = [c.id for c in checks]
        assert len(ids) == len(set(ids))
        assert all(c.kind in KINDS for c in checks)
    assert len({c.id for cs in SUITES.values() for c in cs}) == sum(len(cs) for cs in SUITES.values())


def test_resolve():
    assert resolve(["all"]) == list(SUITES)
    assert resolve(["ccr", "lowering", "ccr"]) == [n for n in SUITES if n in ("ccr", "lowering")]
    with pytest.raises(KeyError):
        resolve(["nope"])


@pytest.mark.parametrize("n, budget", [(0, 0), (1, 1), (20, 1), (21, 2), (40, 2)])
def test_flaky_budget(n, budget):
    assert flaky_budget(n) == budget


def _stat(z):
    r = make_report("s", z, 1.0, 0.0, 100, 0)
    return CheckResult("s", "statistical", 4.0, r.passed, abs(z), r)


def test_summary_rules():
    det_fail = CheckResult("d", "exact", 1e-9, False, 1.0, {})
    assert not summarize([SuiteResult("a", (det_fail,))])["ok"]
    one_flaky = summarize([SuiteResult("a", tuple([_stat(3.5)] + [_stat(0.1)] * 9))])
    assert one_flaky["ok"] and one_flaky["flaky"] == 1
    two_flaky = summarize([SuiteResult("a", tuple([_stat(3.5), _stat(-4.5)] + [_stat(0.1)] * 8))])
    assert not two_flaky["ok"]


def test_kind_filter():
    ctx = Context(Window.cube(0, 1), samples=1000)
    res = run_suites(["lowering", "ccr"], ctx, kinds=["exact"])
    assert all(c.kind == "exact" for r in res for c in r.checks)


def test_deterministic_suites_pass_on_symmetric_window():
    ctx = Context(Window.cube(-1, 1), intensity=2.0)
    res = run_suites(["all"], ctx, kinds=["exact", "quadrature"])
    failed = [(c.id, c.residual) for r in res for c in r.checks if not c.passed]
    assert not failed


def test_check_result_dict():
    d = _stat(1.5).to_dict()
    assert d["pass"] is True and d["z_score"] == 1.5 and not d["flaky"]
    assert "residual" not in d and d["alternative"] == "two-sided"
    e = CheckResult("e", "exact", 1e-9, True, 3e-16, None).to_dict()
    assert e["residual"] == 3e-16 and "z_score" not in e
    inf = CheckResult("e", "exact", 1e-9, False, math.inf, None).to_dict()
    assert inf["residual"] == "inf"  # JSON has no infinity literal
