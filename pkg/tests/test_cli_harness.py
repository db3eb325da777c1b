import argparse
import csv
import io
import json
from fractions import Fraction

import pytest
import yaml

from scripts.cli_harness import (
    RunConfig,
    VerificationReport,
    build_parser,
    default_dinf_grid,
    dinf_distance,
    load_defaults,
    main,
    render_csv,
    render_json,
    resolve_config,
)
from scripts.copula_core import ArchCopula
from scripts.generator import Generator
from scripts.measure_model import approximation_sequence
from scripts.spec_io import load_measure


def copula(name: str) -> ArchCopula:
    return ArchCopula(Generator(load_measure(name)))


def table(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if not line.startswith('#')]
    return list(csv.DictReader(io.StringIO('\n'.join(lines))))


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('WILLIAMSON_OUT_DIR', str(tmp_path / 'out'))
    monkeypatch.delenv('WILLIAMSON_SEED', raising=False)
    monkeypatch.delenv('WILLIAMSON_WORKERS', raising=False)


def test_levelmass(capsys):
    assert main(['levelmass', '--spec', 'two_atom', '--t', '0']) == 0
    report = json.loads(capsys.readouterr().out)
    assert report['mass'] == '32/49'
    assert report['location'] == '1/8'
    assert report['form'] == 'gamma-atom'


def test_bandmass(capsys):
    assert main(['bandmass', '--spec', 'gapped_mixture', '--s1', '2/3', '--s2', '17/24']) == 0
    assert json.loads(capsys.readouterr().out)['mass'] == '2/9'


def test_transform_of_lower_frechet(capsys):
    assert main(['transform', '--spec', 'lower_frechet', '--grid', '8']) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 9
    for row in rows:
        z = float(row['z'])
        assert float(row['psi']) == pytest.approx(max(1 - z / 2, 0.0), abs=1e-12)
    assert float(rows[-1]['z']) == pytest.approx(2.5)


def test_transform_cdf(capsys):
    assert main(['transform', '--spec', 'two_atom', '--what', 'cdf', '--grid', '10']) == 0
    rows = table(capsys.readouterr().out)
    assert float(rows[0]['F_gamma']) == 0
    assert float(rows[-1]['F_gamma']) == pytest.approx(1.0)


def test_eval(capsys):
    assert main(['eval', '--spec', 'lower_frechet', '--points', '0.7,0.6;0.3,0.4']) == 0
    rows = table(capsys.readouterr().out)
    assert [float(r['C']) for r in rows] == pytest.approx([0.3, 0.0], abs=1e-12)


def test_kendall_table(capsys):
    assert main(['kendall', '--spec', 'two_atom', '--grid', '16']) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 17
    for row in rows:
        assert float(Fraction(row['kendall_gamma'])) == pytest.approx(float(Fraction(row['kendall_long'])), abs=1e-9)


def test_levelcurve(capsys):
    assert main(['levelcurve', '--spec', 'lower_frechet', '--t', '1/5', '--grid', '4']) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 4
    # W level curve: y = 1 + t - x for x >= t
    assert float(rows[2]['f_t']) == pytest.approx(1.2 - 0.625, abs=1e-12)


def test_sample_has_a_metadata_comment(capsys):
    assert main(['sample', '--spec', 'two_atom', '--n', '50', '--seed', '3', '--method', 'conditional']) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith('# method=conditional seed=3 measure=')
    assert len(table(out)) == 50


def test_nondiff(capsys):
    assert main(['nondiff', '--spec', 'two_atom', '--x', '0.9,0.9']) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 2
    assert all(row['verdict'] == 'True' for row in rows)


def test_decompose(capsys):
    assert main(['decompose', '--spec', 'gapped_mixture', '--n', '10']) == 0
    report = json.loads(capsys.readouterr().out)
    assert report['method'] == 'mc'
    assert report['support']['graph_f0'] is True


def test_histogram(capsys):
    assert main(['histogram', '--spec', 'lower_frechet', '--n', '200', '--bins', '4']) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 16
    assert sum(int(r['count']) for r in rows) == 200


def test_out_records_a_run(tmp_path, capsys):
    target = tmp_path / 'band.json'
    assert main(['bandmass', '--spec', 'gapped_mixture', '--s1', '1/2', '--s2', '11/18', '--out', str(target)]) == 0
    assert json.loads(target.read_text())['mass'] == '1/9'
    with open(tmp_path / 'out' / 'runs' / '01' / 'manifest.yaml') as f:
        manifest = yaml.safe_load(f)
    assert manifest['subcommand'] == 'bandmass'
    assert manifest['passed'] is True
    assert manifest['outputs'] == [str(target)]
    assert len(manifest['measure_hash']) == 5


def test_input_errors_exit_with_two(capsys):
    assert main(['eval', '--spec', 'no_such_measure', '--points', '0.5,0.5']) == 2
    assert main(['eval', '--spec', 'two_atom', '--points', '0.5,0.5']) == 2
    assert main(['bandmass', '--spec', 'gapped_mixture', '--s1', '0.8', '--s2', '0.2']) == 2
    with pytest.raises(SystemExit) as excinfo:
        main(['eval'])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit):
        main(['sample', '--spec', 'two_atom', '--n', '0'])


def test_config_precedence():
    parser = build_parser()
    args = parser.parse_args(['sample', '--spec', 'two_atom'])
    defaults = {'seed': 5, 'n': 123, 'workers': 2}
    config = resolve_config(args, defaults, {})
    assert (config.seed, config.n, config.workers) == (5, 123, 2)
    assert resolve_config(args, defaults, {'WILLIAMSON_SEED': '9'}).seed == 9
    flagged = parser.parse_args(['sample', '--spec', 'two_atom', '--seed', '1'])
    assert resolve_config(flagged, defaults, {'WILLIAMSON_SEED': '9'}).seed == 1


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig('sample', spec='two_atom', n=0)
    with pytest.raises(ValueError):
        RunConfig('transform', spec='two_atom', grid=1)
    with pytest.raises(ValueError):
        RunConfig('eval')
    with pytest.raises(ValueError):
        RunConfig('plot', spec='two_atom')
    assert RunConfig('verify').spec is None


def test_defaults_file():
    defaults = load_defaults()
    assert defaults['chunk_size'] == 8192
    assert default_dinf_grid(2, defaults) == 256
    assert default_dinf_grid(3, defaults) == 64
    assert default_dinf_grid(5, defaults) == 32
    assert default_dinf_grid(3) == 64


def test_dinf_distance():
    cop = copula('gapped_mixture')
    same = dinf_distance(cop, cop, 32)
    assert same.value == 0.0
    assert same.bound == pytest.approx(2 / 32)
    coarse = dinf_distance(ArchCopula(Generator(approximation_sequence(cop.measure, 'discrete', 10))), cop, 64)
    fine = dinf_distance(ArchCopula(Generator(approximation_sequence(cop.measure, 'discrete', 100))), cop, 64)
    assert fine.value < coarse.value
    with pytest.raises(ValueError):
        dinf_distance(cop, copula('two_atom'), 32)


def test_verification_report():
    report = VerificationReport()
    report.add('exact', 1, 1)
    report.add('close', 0.5, 0.5 + 1e-13, 1e-12)
    assert report.passed
    report.require('condition', False)
    assert not report.passed
    assert report.as_dict()['pass'] is False
    assert len(report.as_dict()['checks']) == 3


def test_renderers():
    text = render_csv(['a', 'b'], [(1, 0.5)], comment='note')
    assert text.splitlines() == ['# note', 'a,b', '1,0.5']
    assert json.loads(render_json({'x': float('inf'), 'y': [1, 2]})) == {'x': 'inf', 'y': [1, 2]}
    assert isinstance(build_parser(), argparse.ArgumentParser)
