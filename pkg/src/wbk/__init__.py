from wbk.forelli_rudin import *
from wbk.geometry import *
from wbk.kernels import *
from wbk.loggers import configure_logging
from wbk.oracles import *
from wbk.sequences import *
from wbk.settings import *
from wbk.types import *
from wbk.weights import *

__version__ = "0.3.0"

configure_logging()
