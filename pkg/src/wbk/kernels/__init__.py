from wbk.kernels.checks import *
from wbk.kernels.gram import *
from wbk.kernels.model import *
