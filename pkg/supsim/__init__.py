from .version import __version__, __versiondate__, __license__
from .settings import *
from .defaults import *
from .base import *
from .utils import *
from .density import *
from .operators import *
from .histogram import *
from .dpm import *
from .gof import *
from .fourier import *
from .quantile import *
from .parameters import *
from .study import *
