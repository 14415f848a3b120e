__version__ = '0.1.0'

from .device import *
from .numerics import *
from .hadamard import *
from .polar import *
from .phy import *
from .detector import *
from .receiver import *
from .harness import *
from .config import *
from .selftest import *
