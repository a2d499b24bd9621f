"""Acceptance battery: one pass/fail line per criterion.

1. exact identities at 1e-9 in under 30 s;
2. quadrature identities at their documented tolerances in under 2 min;
3. statistical identities at 1e5 samples, |z| <= 4 and at most one in twenty flaky, in under 5 min;
4. two ``verify --suite all`` runs with one seed agree byte for byte apart from the timestamp, each under 10 min.
"""

import json
import subprocess
import sys
import time

import pytest

from gamma_fdcalc.configspace import Window
from gamma_fdcalc.suites import EXACT_TOL, Context, run_suites, summarize

pytestmark = pytest.mark.slow


def _line(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def _battery(kind):
    ctx = Context(Window.cube(0.0, 1.0), intensity=4.0, seed=0, samples=100_000)
    t0 = time.perf_counter()
    results = run_suites(["all"], ctx, kinds=[kind])
    return results, time.perf_counter() - t0


def _failures(results):
    return [c.id for r in results for c in r.checks if not c.passed]


def test_exact_identities(capsys):
    results, elapsed = _battery("exact")
    checks = [c for r in results for c in r.checks]
    bad = _failures(results)
    worst = max(c.residual for c in checks)
    ok = not bad and elapsed < 30 and all(c.tolerance <= EXACT_TOL for c in checks)
    _line(capsys, 1, "exact identities", ok, f"{len(checks)} checks, {len(bad)} failed, max residual {worst:.2e}, {elapsed:.1f} s")
    assert not bad, bad
    assert elapsed < 30


def test_quadrature_identities(capsys):
    results, elapsed = _battery("quadrature")
    checks = [c for r in results for c in r.checks]
    bad = _failures(results)
    worst = max(c.residual for c in checks)
    ok = not bad and elapsed < 120
    _line(capsys, 2, "quadrature identities", ok, f"{len(checks)} checks, {len(bad)} failed, max residual {worst:.2e}, {elapsed:.1f} s")
    assert not bad, bad
    assert elapsed < 120


def test_statistical_identities(capsys):
    results, elapsed = _battery("statistical")
    s = summarize(results)
    reports = [c.report for r in results for c in r.checks]
    n = len(reports)
    # distance toward rejection: one-sided checks only fail upward
    worst = max(r.z_score if r.alternative == "less" else abs(r.z_score) for r in reports)
    ok = s["ok"] and elapsed < 300
    _line(capsys, 3, "statistical identities", ok,
          f"{n} checks, {s['failed']} beyond |z|>4, flaky {s['flaky']}/{s['flaky_budget']}, "
          f"worst z toward rejection {worst:.2f}, {elapsed:.1f} s")
    assert s["ok"], [(c.id, c.report.z_score) for r in results for c in r.checks if c.flaky]
    assert elapsed < 300


def _cli_report(tmp_path, tag):
    out = tmp_path / f"{tag}.json"
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "gamma_fdcalc", "verify", "--suite", "all", "--seed", "1234", "--out", str(out)],
        capture_output=True, text=True, timeout=900,
    )
    return proc, out.read_text(encoding="utf-8") if out.exists() else "", time.perf_counter() - t0


def _strip_timestamp(text):
    report = json.loads(text)
    report["meta"].pop("timestamp")
    return json.dumps(report, sort_keys=True, indent=2)


def test_determinism(tmp_path, capsys):
    p1, r1, t1 = _cli_report(tmp_path, "first")
    p2, r2, t2 = _cli_report(tmp_path, "second")
    same = bool(r1) and _strip_timestamp(r1) == _strip_timestamp(r2)
    # also byte-level: only the timestamp line may differ
    diff = [(a, b) for a, b in zip(r1.splitlines(), r2.splitlines()) if a != b]
    only_ts = all('"timestamp"' in a for a, _ in diff) and len(r1.splitlines()) == len(r2.splitlines())
    ok = same and only_ts and t1 < 600 and t2 < 600 and p1.returncode == p2.returncode == 0
    _line(capsys, 4, "determinism", ok,
          f"reports identical modulo timestamp: {same and only_ts}, exit {p1.returncode}/{p2.returncode}, runs {t1:.0f} s and {t2:.0f} s")
    assert p1.returncode == 0, p1.stderr
    assert same and only_ts
    assert t1 < 600 and t2 < 600
