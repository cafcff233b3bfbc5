from wbk.sequences.generators import *
from wbk.sequences.rates import rate_fit
from wbk.sequences.runs import build_steps, run_increasing, run_outside, thm15_norm_check
