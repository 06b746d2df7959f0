from ._merit import *
from ._cones import *
from ._backend import *
from ._interior import *
from ._splitting import *
from ._solver import *
from ._context import *
from ._settings import *
from ._environment import *
from ._instance import *
from ._weighted import *
from ._density import *
from ._algorithms import *
from ._duality import *
from ._oracle import *
from ._experiments import *
