import dataclasses

from evaluation import (
    CheckReport,
    all_passed,
    check_iss_decay,
    check_min_dwell,
    check_prop1_bound,
    check_ras_invariance,
    check_time_domain,
    dwell_bound,
    summarize,
)


def test_clean_run_passes(short_example1_run, example1_bank):
    trajectory = short_example1_run
    reports = [
        check_prop1_bound(trajectory),
        check_time_domain(trajectory),
        check_min_dwell(trajectory, dwell_bound(trajectory, example1_bank, 0.999)),
        check_iss_decay(trajectory, 0.01, 0.2),
    ]
    assert all_passed(reports), [r for r in reports if not r.passed]
    assert reports[0].n_checked == trajectory.t.size - 1
    assert reports[0].n_skipped == 0


def test_inflated_state_breaks_prop1(short_example1_run):
    corrupted = dataclasses.replace(short_example1_run, x=1.5 * short_example1_run.x)
    report = check_prop1_bound(corrupted)
    assert not report.passed
    assert report.worst_margin < 0.0


def test_bound_ignores_gamma(short_example1_run):
    events = tuple(
        dataclasses.replace(event, gamma=0.5 * event.gamma) for event in short_example1_run.events
    )
    relabeled = dataclasses.replace(short_example1_run, events=events)
    assert check_prop1_bound(relabeled) == check_prop1_bound(short_example1_run)


def test_time_running_backwards(short_example1_run):
    t = short_example1_run.t.copy()
    t[5] = t[4] - 1e-3
    report = check_time_domain(dataclasses.replace(short_example1_run, t=t))
    assert not report.passed


def test_jump_without_reset(short_example1_run):
    e = short_example1_run.e.copy()
    e[1] = 1e-3  # post-jump sample of the first event
    report = check_time_domain(dataclasses.replace(short_example1_run, e=e))
    assert not report.passed


def test_dwell_failure(short_example1_run):
    report = check_min_dwell(short_example1_run, 10.0)
    assert not report.passed
    assert report.n_violations == short_example1_run.num_events - 1


def test_too_fast_decay_claim(short_example1_run):
    assert not check_iss_decay(short_example1_run, 50.0, 50.0).passed


def test_ras_invariance(short_example1_run):
    assert check_ras_invariance(short_example1_run, 1e-9, 100.0).passed
    report = check_ras_invariance(short_example1_run, 1e-9, 1.0)
    assert not report.passed
    assert report.worst_margin <= 1.0 + 1e-6 - 1.55 + 1e-9


def test_summarize(short_example1_run):
    reports = [check_time_domain(short_example1_run)]
    summary = summarize(short_example1_run, reports)
    assert set(summary) == {
        "label",
        "num_events",
        "min_interval",
        "max_interval",
        "mean_interval",
        "num_fallback",
        "final_V",
        "checks",
    }
    assert summary["label"] == "fir"
    assert summary["num_events"] == short_example1_run.num_events
    assert summary["min_interval"] <= summary["mean_interval"] <= summary["max_interval"]
    assert summary["checks"]["time_domain"]["passed"]


def test_report_to_dict():
    report = CheckReport("x", False, 3, 1, -0.5)
    assert report.to_dict() == {
        "passed": False,
        "n_checked": 3,
        "n_violations": 1,
        "worst_margin": -0.5,
        "n_skipped": 0,
    }
    assert not all_passed([report, CheckReport("y", True, 1, 0, 0.0)])
    assert all_passed([])
