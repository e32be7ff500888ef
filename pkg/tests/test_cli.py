import contextlib
import io
import os
import tempfile
import unittest

from coopdstc import cli, results


CONFIG = """
# quick fixed-code run
scheme = D-Alamouti
snr_grid_db = 0, 10
frames = 3
frame_len = 20
calibration_draws = 10
pep_trials = 2000
candidates = 10
quadrature_terms = 16
"""


class TestCLI(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.config = self.path('exp.cfg')
        with open(self.config, 'w') as f:
            f.write(CONFIG)

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def run_cli(self, *argv):
        stderr = io.StringIO()
        with contextlib.redirect_stderr(stderr):
            code = cli.main(list(argv))
        return code, stderr.getvalue()

    def test_ber_writes_csv(self):
        out = self.path('ber.csv')
        code, _ = self.run_cli('ber', '--config', self.config, '--seed', '3', '--out', out)
        self.assertEqual(code, 0)
        with open(out) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], 'snr_db,bit_errors,bits_total,ber,noise_variance')
        self.assertEqual(len(lines), 3)

    def test_rerun_is_byte_identical(self):
        first, second = self.path('a.csv'), self.path('b.csv')
        self.run_cli('ber', '--config', self.config, '--seed', '5', '--out', first)
        self.run_cli('ber', '--config', self.config, '--seed', '5', '--out', second)
        with open(first, 'rb') as a, open(second, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_database(self):
        out = self.path('bounds.csv')
        url = 'sqlite:///' + self.path('runs.db')
        code, _ = self.run_cli('bounds', '--config', self.config, '--out', out, '--db', url)
        self.assertEqual(code, 0)
        engine = results.create_engine(url)
        self.assertEqual(results.get_table_names(engine), ['bounds_results'])
        self.assertEqual(len(results.select_records_all('bounds_results', engine)), 2)

    def test_config_error_exit_code(self):
        with open(self.config, 'a') as f:
            f.write('scheme_typo = 1\n')
        code, err = self.run_cli('ber', '--config', self.config, '--out', self.path('x.csv'))
        self.assertEqual(code, 2)
        self.assertTrue(err.startswith('coopdstc: error:'))
        self.assertEqual(len(err.strip().splitlines()), 1)

    def test_missing_config(self):
        code, _ = self.run_cli('fdarmo', '--config', self.path('none.cfg'), '--out', self.path('x.csv'))
        self.assertEqual(code, 2)

    def test_unsupported_subcommand_for_scheme(self):
        code, err = self.run_cli('converge', '--config', self.config, '--out', self.path('x.csv'))
        self.assertEqual(code, 2)
        self.assertIn('adaptive', err)

    def test_unwritable_output(self):
        code, err = self.run_cli('fdarmo', '--config', self.config, '--out', self.path('missing/x.csv'))
        self.assertEqual(code, 1)
        self.assertIn('missing', err)
