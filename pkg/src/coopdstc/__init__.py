__version__ = '1.0.0'

import coopdstc.numerics as numerics
import coopdstc.constellation as constellation
import coopdstc.system as system
import coopdstc.receivers as receivers
import coopdstc.armo as armo
import coopdstc.feedback as feedback
import coopdstc.analysis as analysis
import coopdstc.config as config
import coopdstc.link as link
import coopdstc.harness as harness
import coopdstc.records as records
import coopdstc.results as results
from coopdstc.config import build_experiment_config, load_config
from coopdstc.harness import run_ber, run_convergence, run_bound_comparison, run_fd_armo
from coopdstc.records import emit_csv
from coopdstc.system import SystemConfig, AdjustableCodeBank
