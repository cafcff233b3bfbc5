from .errors import *
from .main import *
from .reports import *
