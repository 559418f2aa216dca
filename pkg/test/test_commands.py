from src.commands import *
from src import __version__
from src.config_processor import build_run_config, read_default_config
from src.soliton_profiles import peak_amplitude
from src.utils import DomainError
import TRANSTAB
import unittest
import contextlib
import io
import json
import os
import tempfile
import numpy as np
import pandas as pd


def read_output(path):
    return pd.read_csv(path, skiprows=1, float_precision='round_trip')


class TestCommands(unittest.TestCase):
    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()
        self.out = self.folder.name
        self.defaults = read_default_config()
        self.quiet = contextlib.redirect_stdout(io.StringIO())
        self.quiet.__enter__()

    def tearDown(self):
        self.quiet.__exit__(None, None, None)
        self.folder.cleanup()

    def config(self, command, **flags):
        flags.setdefault('out', self.out)
        return build_run_config(command, flags, defaults=self.defaults, environ={})

    def test_soliton(self):
        path = cmd_soliton(self.config('soliton', model='mtm', omega=[0.5]))[0]
        with open(path) as f:
            header = f.readline()
        frame = read_output(path)
        peak = peak_amplitude(make_profile(ModelKind.MASSIVE_THIRRING, 0.5))
        self.assertTrue(header.startswith('# transtab ') and '"command": "soliton"' in header)
        self.assertEqual(list(frame.columns), ['x', 're_u', 'im_u', 'abs_u'])
        self.assertEqual(len(frame), 401)
        self.assertLessEqual(abs(frame['abs_u'].max() - peak), 1e-10)

    def test_soliton_domain_error(self):
        with self.assertRaises(DomainError):
            cmd_soliton(self.config('soliton', model='gn', omega=[0.0]))

    def test_soliton_algebraic_limit(self):
        with self.assertRaises(DomainError):
            cmd_soliton(self.config('soliton', model='mtm', omega=[-1.0]))
        path = cmd_soliton(self.config('soliton', model='mtm', omega=[-1.0], allow_limit=True, x_max=1.0, points=3))[0]
        self.assertAlmostEqual(read_output(path)['abs_u'][1], 2.0, places=14)

    def test_asymptotics(self):
        path = cmd_asymptotics(self.config('asymptotics', model='mtm', omega=[0.0, 0.5]))
        row = read_output(path).iloc[0]
        self.assertTrue(row['omega'] == 0.0 and abs(row['lambda_r'] - 1.77245) < 1e-5 and abs(row['lambda_i'] - 1.77245) < 1e-5)

    def test_asymptotics_gn(self):
        path = cmd_asymptotics(self.config('asymptotics', model='gn', omega=[2.0 / 3.0, 0.9999]))
        frame = read_output(path)
        first = abs(frame['lambda_r'][0] - 0.74536) < 1e-5 and abs(frame['lambda_i'][0] - 0.47491) < 1e-5
        edge = frame['lambda_r'][1] < 0.02 and frame['lambda_i'][1] < 0.02
        self.assertTrue(first and edge)

    def test_asymptotics_corrections(self):
        frame = read_output(cmd_asymptotics(self.config('asymptotics', model='gn', omega=[0.5], corrections=True)))
        self.assertEqual(list(frame.columns)[3:], ['alpha_re', 'alpha_im', 'beta_re', 'beta_im'])
        with self.assertRaises(ArgumentError):
            cmd_asymptotics(self.config('asymptotics', model='mtm', omega=[0.5], corrections=True))

    def test_asymptotics_reproducible(self):
        config = self.config('asymptotics', model='gn', omega_range=[0.1, 0.9, 0.2])
        with open(cmd_asymptotics(config), 'rb') as f:
            first = f.read()
        with open(cmd_asymptotics(config), 'rb') as f:
            second = f.read()
        self.assertEqual(first, second)

    def test_spectrum(self):
        paths = cmd_spectrum(self.config('spectrum', model='mtm', omega=[0.0], p=1.0, n=40, dump_matrix=True))
        frame = read_output(paths[0])
        with open(paths[1]) as f:
            summary = json.load(f)['summary']
        self.assertEqual(len(frame), 4 * 41)
        self.assertTrue(summary['gap_closed'] and summary['half_gap'] == 0.0 and os.path.exists(paths[2]))

    def test_spectrum_band_edges(self):
        frame = read_output(cmd_spectrum(self.config('spectrum', model='mtm', omega=[0.0], p=0.5, n=40))[0])
        self.assertGreaterEqual(int(frame['on_band_edge'].sum()), 4)

    def test_spectrum_isolated_real_eigenvalue(self):
        paths = cmd_spectrum(self.config('spectrum', model='mtm', omega=[0.0], p=0.1, n=200))
        frame = read_output(paths[0])
        isolated = frame[frame['isolated'] & (frame['class'] == 'real_pair')]
        target = 0.1 * np.sqrt(np.pi)
        self.assertLessEqual(np.min(np.abs(isolated['re_lambda'] - target)) / target, 0.02)

    def test_spectrum_json(self):
        path = cmd_spectrum(self.config('spectrum', model='gn', omega=[0.5], p=0.3, n=30, format='json'))[0]
        with open(path) as f:
            document = json.load(f)
        self.assertTrue(document['version'] == __version__ and len(document['eigenvalues']) == 4 * 31)
        self.assertEqual(document['config']['model'], 'gn')

    def test_sweep(self):
        paths = cmd_sweep(self.config('sweep', model='mtm', omega=[0.5], p_range=[0.05, 0.2, 0.05], n=200))
        frame = read_output(paths[0])
        with open(paths[1]) as f:
            summary = json.load(f)['summary']
        final = frame[(frame['p'] == 0.2) & (frame['class'] == 'real_pair') & (frame['re_lambda'] > 0)]
        lambda_r = asymptotic_prediction(ModelKind.MASSIVE_THIRRING, 0.5).lambda_r
        self.assertEqual(list(frame.columns), ['model', 'omega', 'p', 'branch_id', 're_lambda', 'im_lambda', 'class', 'residual'])
        self.assertTrue(summary['real_pair_at_final_p'] and summary['unstable_at_final_p'])
        self.assertLessEqual(np.min(np.abs(final['re_lambda'] - 0.2 * lambda_r)) / (0.2 * lambda_r), 0.05)

    def test_sweep_gn_threshold(self):
        paths = cmd_sweep(self.config('sweep', model='gn', omega=[2.0 / 3.0], p_range=[0.2, 1.2, 0.2]))
        with open(paths[1]) as f:
            summary = json.load(f)['summary']
        threshold = summary['instability_threshold']
        self.assertTrue(0.2 in summary['unstable_p'] and threshold is not None and threshold <= 1.2)
        self.assertTrue(1.0 not in summary['unstable_p'] and not summary['real_pair_at_final_p'])
        self.assertIsNone(summary['gap_closure_p'])

    def test_sweep_empty_range(self):
        with self.assertRaises(ArgumentError):
            cmd_sweep(self.config('sweep', model='mtm', omega=[0.5], p_range=[0.5, 0.1, 0.1]))

    def test_validate(self):
        tables = {'mtm': {'im_cutoff': 10.0, 'omega': [0.5], 'metric': {'40': [1.0]}}}
        report = cmd_validate(self.config('validate', model='mtm', n_values=[40]), tables)
        self.assertTrue(len(report) == 1 and bool(report['passed'][0]) and report['ceiling'][0] == 10.0)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'validate.csv')))

    def test_validate_failure(self):
        tables = {'mtm': {'im_cutoff': 10.0, 'omega': [0.5], 'metric': {'40': [1e-14]}}}
        with self.assertRaises(ValidationFailure):
            cmd_validate(self.config('validate', model='mtm', n_values=[40]), tables)

    def test_validate_mtm_table(self):
        config = self.config('validate', model='mtm', n_values=[100, 300])
        report = cmd_validate(config)
        coarse = report[report['n'] == 100]['metric']
        self.assertTrue(bool(report['passed'].all()) and coarse.max() > 1e-3)

    def test_validate_gn_table(self):
        config = self.config('validate', model='gn', n_values=[100, 300])
        report = cmd_validate(config)
        self.assertEqual(len(report), 4)
        self.assertTrue(bool(report['passed'].all()) and bool((report['metric'] <= report['ceiling']).all()))
        self.assertTrue(set(report['omega'].round(6)) == {0.333333, 0.666667})

    def test_main_exit_codes(self):
        with contextlib.redirect_stderr(io.StringIO()):
            domain = TRANSTAB.main(['soliton', '--model', 'gn', '--omega', '0', '--out', self.out])
            argument = TRANSTAB.main(['sweep', '--model', 'mtm', '--omega', '0.5', '--p-range', '1', '0', '0.1', '--out', self.out])
        success = TRANSTAB.main(['soliton', '--model', 'mtm', '--omega', '0.5', '--points', '11', '--out', self.out])
        self.assertEqual((domain, argument, success), (2, 2, 0))

    def test_main_unwritable_output(self):
        blocker = os.path.join(self.out, 'blocker')
        with open(blocker, 'w') as f:
            f.write('not a folder')
        with contextlib.redirect_stderr(io.StringIO()) as errors:
            code = TRANSTAB.main(['soliton', '--model', 'mtm', '--omega', '0.5', '--points', '11', '--out', blocker])
        self.assertTrue(code == 2 and 'cannot write output' in errors.getvalue())

    def test_main_validation_exit_code(self):
        config_path = os.path.join(self.out, 'narrow.json')
        with open(config_path, 'w') as f:
            json.dump({'model': 'mtm', 'omega': 0.5, 'im_cutoff': 3.0, 'n': 20, 'out': self.out}, f)
        code = TRANSTAB.main(['validate', '--config', config_path])
        self.assertEqual(code, 0)


if __name__ == '__main__':
    unittest.main()
