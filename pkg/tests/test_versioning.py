import pytest

from scripts import list_runs
from scripts.spec_io import load_measure
from scripts.versioning import (
    compute_measure_hash,
    create_new_run,
    get_latest_run,
    get_run_path,
    read_manifest,
    update_manifest_outcome,
    update_manifest_output,
)


def test_measure_hash():
    m = load_measure('two_atom')
    first = compute_measure_hash(m, seed=1)
    assert len(first) == 5
    assert first == compute_measure_hash(load_measure('two_atom'), seed=1)
    assert first != compute_measure_hash(m, seed=2)
    assert first != compute_measure_hash(load_measure('uniform'), seed=1)


def test_runs_are_numbered(tmp_path):
    assert get_latest_run(tmp_path) == 0
    assert create_new_run('sample', 'abcde', 1, 100, 64, tmp_path) == 1
    assert create_new_run('verify', None, 1, 100, 64, tmp_path) == 2
    assert get_latest_run(tmp_path) == 2
    assert get_run_path(2, tmp_path) == tmp_path / 'runs' / '02'


def test_manifest_updates(tmp_path):
    run = create_new_run('kendall', 'abcde', 7, 1000, 32, tmp_path)
    manifest = read_manifest(run, tmp_path)
    assert manifest['subcommand'] == 'kendall'
    assert manifest['seed'] == 7
    assert manifest['outputs'] == []
    assert manifest['passed'] is None
    update_manifest_output(run, 'kendall.csv', tmp_path)
    update_manifest_output(run, 'kendall.csv', tmp_path)
    update_manifest_outcome(run, True, tmp_path)
    manifest = read_manifest(run, tmp_path)
    assert manifest['outputs'] == ['kendall.csv']
    assert manifest['passed'] is True


def test_missing_manifest(tmp_path):
    assert read_manifest(3, tmp_path) is None
    with pytest.raises(ValueError):
        update_manifest_outcome(3, False, tmp_path)


def test_list_runs(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv('WILLIAMSON_OUT_DIR', str(tmp_path))
    list_runs.main()
    assert 'No runs found.' in capsys.readouterr().out
    run = create_new_run('bandmass', 'f00ba', 1, 10, 8, tmp_path)
    update_manifest_outcome(run, False, tmp_path)
    list_runs.main()
    out = capsys.readouterr().out
    assert 'bandmass' in out and 'f00ba' in out and 'fail' in out
