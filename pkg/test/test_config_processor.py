from src.config_processor import *
import unittest
import os

TEST_CONFIG_PATH = os.path.join(os.path.dirname(__file__), 'test_data/test_config.json')
TEST_INVALID_CONFIG_PATH = os.path.join(os.path.dirname(__file__), 'test_data/test_config_invalid.json')
TEST_MISSING_CONFIG_PATH = os.path.join(os.path.dirname(__file__), 'test_data/no_such_config.json')


class TestConfigProcessor(unittest.TestCase):
    def setUp(self):
        self.defaults = read_default_config()
        self.config_path = TEST_CONFIG_PATH

    def build(self, command, flags, config_path=None, environ=None):
        return build_run_config(command, flags, config_path, self.defaults, {} if environ is None else environ)

    def test_model_defaults(self):
        mtm = self.build('spectrum', {'model': 'mtm', 'omega': [0.5], 'p': 0.2})
        gn = self.build('spectrum', {'model': 'gn', 'omega': [0.5]})
        mtm_match = mtm.n == 300 and mtm.scale == 10.0 and mtm.p == [0.2] and mtm.class_tol == 1e-6
        gn_match = gn.n == 400 and gn.p == [0.0] and gn.class_tol == 1e-4
        self.assertTrue(mtm_match and gn_match and mtm.model is ModelKind.MASSIVE_THIRRING)

    def test_config_file(self):
        config = self.build('sweep', {}, self.config_path)
        file_match = config.model is ModelKind.GROSS_NEVEU and config.n == 50 and config.backend == 'qr'
        grid_match = config.p == [0.0, 0.05, 0.1, 0.15, 0.2] and config.omega == [0.5]
        self.assertTrue(file_match and grid_match and config.out == './file_output/')

    def test_flags_override_file(self):
        config = self.build('sweep', {'n': 60, 'omega': [0.25, 0.75], 'out': './flag_output/'}, self.config_path,
                            {OUTPUT_DIR_VARIABLE: './env_output/'})
        self.assertTrue(config.n == 60 and config.omega == [0.25, 0.75] and config.out == './flag_output/')

    def test_environment_output_dir(self):
        from_env = self.build('soliton', {'model': 'mtm', 'omega': [0.0]}, environ={OUTPUT_DIR_VARIABLE: './env_output/'})
        from_file = self.build('soliton', {}, self.config_path, {OUTPUT_DIR_VARIABLE: './env_output/'})
        packaged = self.build('soliton', {'model': 'mtm', 'omega': [0.0]})
        self.assertTrue(from_env.out == './env_output/' and from_file.out == './file_output/' and packaged.out == './output/')

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            read_user_config(TEST_INVALID_CONFIG_PATH)
        with self.assertRaises(ConfigError):
            read_user_config(TEST_MISSING_CONFIG_PATH)

    def test_missing_arguments(self):
        with self.assertRaises(ArgumentError):
            self.build('sweep', {'omega': [0.5]})
        with self.assertRaises(ArgumentError):
            self.build('soliton', {'model': 'mtm'})
        with self.assertRaises(ArgumentError):
            self.build('spectrum', {'model': 'mtm', 'omega': [0.5], 'p_range': [0.0, 0.2, 0.1]})
        with self.assertRaises(ArgumentError):
            self.build('plot', {'model': 'mtm'})

    def test_invalid_arguments(self):
        with self.assertRaises(ArgumentError):
            self.build('spectrum', {'model': 'mtm', 'omega': [0.5], 'n': 1})
        with self.assertRaises(ArgumentError):
            self.build('sweep', {'model': 'mtm', 'omega': [0.5], 'jobs': 0})
        with self.assertRaises(ArgumentError):
            self.build('sweep', {'model': 'mtm', 'omega': [0.5], 'margin': -0.1})

    def test_range_grid(self):
        self.assertEqual(range_grid(0.0, 0.3, 0.1), [0.0, 0.1, 0.2, 0.3])
        self.assertEqual(range_grid(0.5, 0.5, 0.1), [0.5])
        with self.assertRaises(ArgumentError):
            range_grid(1.0, 0.0, 0.1)
        with self.assertRaises(ArgumentError):
            range_grid(0.0, 1.0, 0.0)

    def test_default_p_grid(self):
        mtm = default_p_grid(self.defaults, ModelKind.MASSIVE_THIRRING)
        gn = default_p_grid(self.defaults, ModelKind.GROSS_NEVEU)
        mtm_match = len(mtm) == 81 and mtm[0] == 0.0 and mtm[50] == 0.5 and mtm[51] == 0.55 and mtm[-1] == 2.0
        gn_match = len(gn) == 71 and gn[-1] == 1.5
        self.assertTrue(mtm_match and gn_match)

    def test_default_omega_grid(self):
        config = self.build('asymptotics', {'model': 'mtm'})
        grid_match = len(config.omega) == 41 and config.omega[0] == -0.975 and config.omega[-1] == 0.975
        self.assertTrue(grid_match and 0.0 in config.omega)

    def test_validate_defaults(self):
        standard = self.build('validate', {})
        narrow = self.build('validate', {'im_cutoff': 2.0})
        self.assertTrue(standard.model is None and standard.n_values == [100, 300] and narrow.n_values is None)

    def test_to_dict(self):
        echo = self.build('spectrum', {'model': 'gn', 'omega': [0.5]}).to_dict()
        self.assertTrue(echo['model'] == 'gn' and echo['command'] == 'spectrum' and echo['n'] == 400)

    def test_reference_tables(self):
        tables = read_reference_tables()
        self.assertEqual(tables['mtm']['metric']['300'], [1.36e-4, 2.18e-4, 7.02e-5])
        self.assertEqual(tables['gn_narrow']['im_cutoff'], 2.0)


if __name__ == '__main__':
    unittest.main()
