import io

from scripts.cli_harness import VerificationReport
from scripts.verify import check_disintegration, check_gapped, check_purity, check_round_trips, check_two_atom


def run_check(check, *args):
    report = VerificationReport()
    log = io.StringIO()
    ok = check(report, *args, log=log)
    return ok, report, log.getvalue()


def test_two_atom_section():
    ok, report, log = run_check(check_two_atom)
    assert ok and report.passed
    assert 'TWO-ATOM GENERATOR' in log
    assert '✗' not in log


def test_gapped_section():
    ok, report, _ = run_check(check_gapped)
    assert ok and report.passed
    assert len(report.checks) == 7


def test_round_trip_section():
    ok, report, _ = run_check(check_round_trips)
    assert ok and report.passed


def test_purity_section():
    ok, report, log = run_check(check_purity, 1)
    assert ok and report.passed
    assert log.count('✓') == 6


def test_disintegration_section_runs_on_singular_measures():
    report = VerificationReport()
    log = io.StringIO()
    ok = check_disintegration(report, 7, 4000, 1, log=log, names=('cantor',))
    assert ok and report.passed
    assert 'cantor: kernel integrates to y, outside 4 SE' in log.getvalue()
    assert len(report.checks) == 3
