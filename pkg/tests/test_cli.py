"""End-to-end tests for the command-line application."""

import pytest

from paritysim.app import main
from paritysim.cli.commands import EXIT_OK, EXIT_USAGE
from paritysim.cli.reports import RunReport, merge_runs, render


def _report(text):
    return dict(line.split(' = ', 1) for line in text.splitlines())


class TestRun:

    def test_refined(self, capsys):
        assert main(['run', '10', '--algorithm', 'refined']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['a_measured'] == '10'
        assert report['queries_used'] == '1'
        assert report['qubits_used'] == '2'
        assert report['certain'] == 'true'
        assert report['separable'] == 'true'
        assert 'wall_time_s' not in report

    def test_classical(self, capsys):
        assert main(['run', '0000', '--algorithm', 'classical']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['queries_used'] == '4'
        assert report['qubits_used'] == 'n/a'

    def test_original(self, capsys):
        assert main(['run', '101', '--algorithm', 'original']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['a_measured'] == '101'
        assert report['queries_used'] == '1'
        assert report['qubits_used'] == '4'
        assert report['backend'] == 'dense'

    def test_timing_flag(self, capsys):
        assert main(['run', '1', '--timing']) == EXIT_OK
        assert 'wall_time_s' in _report(capsys.readouterr().out)

    def test_writes_report_file(self, tmp_path, capsys):
        out = tmp_path / 'run.txt'
        assert main(['run', '0110', '--out', str(out)]) == EXIT_OK
        assert out.read_text() == capsys.readouterr().out

    def test_output_is_deterministic(self, capsys):
        main(['run', '110101', '--backend', 'dense'])
        first = capsys.readouterr().out
        main(['run', '110101', '--backend', 'dense'])
        assert capsys.readouterr().out == first

    def test_separability_tolerance_sets_flag(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr('paritysim.services.bv.max_impurity', lambda state: 1e-6)
        assert main(['run', '101']) == EXIT_OK
        assert _report(capsys.readouterr().out)['separable'] == 'false'

        cfg = tmp_path / 'loose.cfg'
        cfg.write_text("separability_tol = 1e-3\n")
        assert main(['--config', str(cfg), 'run', '101']) == EXIT_OK
        assert _report(capsys.readouterr().out)['separable'] == 'true'

    def test_unwritable_output(self, tmp_path, capsys):
        out = tmp_path / 'missing' / 'run.txt'
        assert main(['run', '01', '--out', str(out)]) == EXIT_USAGE
        assert 'cannot write output' in capsys.readouterr().err

    def test_malformed_string(self, capsys):
        assert main(['run', '10a']) == EXIT_USAGE
        assert 'error:' in capsys.readouterr().err

    def test_dense_guard(self, capsys):
        assert main(['run', '1' * 30, '--backend', 'dense']) == EXIT_USAGE
        assert 'dense limit' in capsys.readouterr().err

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / 'bad.cfg'
        cfg.write_text("sweep_width = 100\n")
        assert main(['--config', str(cfg), 'run', '1']) == EXIT_USAGE
        assert 'sweep_width' in capsys.readouterr().err


class TestSweep:

    def test_exhaustive_two_qubits(self, capsys):
        assert main(['sweep', '--n', '2', '--trials', '4']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['mode'] == 'exhaustive'
        assert report['success_rate'] == '1'

    def test_exhaustive_eight_qubits(self, capsys):
        assert main(['sweep', '--n', '8', '--trials', '256', '--backend', 'dense']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['successes'] == '256'
        assert float(report['max_impurity']) <= 1e-10

    def test_product_thousand_qubits(self, capsys):
        assert main(['sweep', '--n', '1000', '--trials', '10', '--timing']) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['mode'] == 'random'
        assert report['success_rate'] == '1'
        assert float(report['mean_wall_time_s']) < 1.0

    def test_workers_do_not_change_the_report(self, capsys):
        main(['--seed', '5', 'sweep', '--n', '12', '--trials', '20'])
        serial = capsys.readouterr().out
        main(['--seed', '5', 'sweep', '--n', '12', '--trials', '20', '--workers', '4'])
        assert capsys.readouterr().out == serial

    def test_separable_over_all_trials(self, tmp_path, capsys):
        cfg = tmp_path / 'strict.cfg'
        cfg.write_text("separability_tol = 1e-12\n")
        assert main(['--config', str(cfg), 'sweep', '--n', '3', '--trials', '8', '--backend', 'dense']) == EXIT_OK
        assert _report(capsys.readouterr().out)['separable'] == 'true'

    def test_unwritable_output(self, tmp_path, capsys):
        out = tmp_path / 'missing' / 'sweep.txt'
        assert main(['sweep', '--n', '2', '--trials', '4', '--out', str(out)]) == EXIT_USAGE

    def test_rejects_zero_trials(self, capsys):
        assert main(['sweep', '--n', '3', '--trials', '0']) == EXIT_USAGE

    def test_dense_guard(self, capsys):
        assert main(['sweep', '--n', '30', '--trials', '1', '--backend', 'dense']) == EXIT_USAGE


class TestNmr:

    @pytest.mark.parametrize("a, signs", [
        ('00', '(+,+)'),
        ('01', '(+,-)'),
        ('10', '(-,+)'),
        ('11', '(-,-)'),
    ])
    def test_decodes_every_string(self, tmp_path, capsys, a, signs):
        prefix = str(tmp_path / f'nmr_{a}')
        assert main(['nmr', a, '--out', prefix]) == EXIT_OK
        report = _report(capsys.readouterr().out)
        assert report['a_decoded'] == a
        assert report['signs'] == signs
        assert float(report['answer_weight']) == pytest.approx(1.0, abs=1e-9)

    def test_writes_artifacts(self, tmp_path, capsys):
        prefix = tmp_path / 'run'
        assert main(['nmr', '01', '--out', str(prefix)]) == EXIT_OK
        for suffix in ('_reference_fid.csv', '_reference_spectrum.csv', '_fid.csv', '_spectrum.csv',
                       '_sequence.txt', '_report.txt'):
            assert (tmp_path / f'run{suffix}').exists()
        spectrum = (tmp_path / 'run_spectrum.csv').read_text().splitlines()
        assert spectrum[0] == 'freq_hz,real,imag'
        assert len(spectrum) == 16384 + 1
        assert (tmp_path / 'run_sequence.txt').read_text().startswith('SEQUENCE label=experiment a=01')
        assert (tmp_path / 'run_report.txt').read_text() == capsys.readouterr().out

    def test_artifacts_are_deterministic(self, tmp_path, capsys):
        main(['nmr', '11', '--out', str(tmp_path / 'first')])
        main(['nmr', '11', '--out', str(tmp_path / 'second')])
        for suffix in ('_spectrum.csv', '_fid.csv', '_report.txt'):
            assert (tmp_path / f'first{suffix}').read_text() == (tmp_path / f'second{suffix}').read_text()

    def test_unwritable_prefix(self, tmp_path, capsys):
        prefix = tmp_path / 'missing' / 'run'
        assert main(['nmr', '10', '--out', str(prefix)]) == EXIT_USAGE
        assert 'cannot write output' in capsys.readouterr().err

    def test_needs_two_bits(self, capsys):
        assert main(['nmr', '101']) == EXIT_USAGE


class TestFidelityAndBench:

    def test_fidelity_table(self, capsys):
        assert main(['fidelity']) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'sequence,fidelity'
        rows = dict(line.split(',') for line in lines[1:])
        assert rows['soft_z(A)'] == '1.000000'
        assert rows['composite_z_all'] == '1.000000'
        assert rows['U_00'] == '1.000000'
        assert len(rows) == 9

    def test_bench(self, capsys):
        assert main(['bench', '--dense-max-n', '6', '--max-n', '1000']) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'n,backend,seconds'
        plan = [tuple(line.split(',')[:2]) for line in lines[1:]]
        assert plan == [('2', 'dense'), ('4', 'dense'), ('6', 'dense'),
                        ('10', 'product'), ('100', 'product'), ('1000', 'product')]

    def test_bench_skips_dense_beyond_the_limit(self, tmp_path, capsys):
        cfg = tmp_path / 'small.cfg'
        cfg.write_text("dense_limit = 4\n")
        out = tmp_path / 'bench.csv'
        assert main(['--config', str(cfg), 'bench', '--dense-max-n', '8', '--max-n', '10', '--out', str(out)]) == EXIT_OK
        dense = [line for line in out.read_text().splitlines() if ',dense,' in line]
        assert [line.split(',')[0] for line in dense] == ['2', '4']

    def test_bench_unwritable_output(self, tmp_path, capsys):
        out = tmp_path / 'missing' / 'bench.csv'
        assert main(['bench', '--dense-max-n', '2', '--max-n', '10', '--out', str(out)]) == EXIT_USAGE


class TestReports:

    def test_render_formats(self):
        text = render([('flag', True), ('missing', None), ('x', 0.1 + 0.2), ('name', 'a')])
        assert text == "flag = true\nmissing = n/a\nx = 0.3\nname = a\n"

    def test_merge_counts_only_certain_successes(self):
        runs = [
            RunReport(2, '10', '10', 'refined', 'product', 1, 2, 0.0, True),
            RunReport(2, '11', '11', 'refined', 'product', 1, 2, 0.0, False),
            RunReport(2, '01', '00', 'refined', 'product', 1, 2, 0.0, True),
        ]
        summary = merge_runs(runs, 2, 'product', 0, 'random')
        assert summary.successes == 1
        assert summary.success_rate == pytest.approx(1 / 3)
        assert summary.separable is None

    def test_merge_requires_every_run_separable(self):
        runs = [
            RunReport(1, '1', '1', 'refined', 'dense', 1, 1, 0.0, True, separable=True),
            RunReport(1, '0', '0', 'refined', 'dense', 1, 1, 1e-6, True, separable=False),
        ]
        assert merge_runs(runs, 1, 'dense', 0, 'random').separable is False
        assert merge_runs(runs[:1], 1, 'dense', 0, 'random').separable is True
