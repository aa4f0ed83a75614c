__version__ = (0, 1, 'dev')


from .exceptions import *  # noqa
from .options import *  # noqa
from .mesh import *  # noqa
from .fem import *  # noqa
from .matfunc import *  # noqa
from .noise import *  # noqa
from .model import *  # noqa
from .integrator import *  # noqa
from .reference import *  # noqa
from .columns import *  # noqa
from .memory import *  # noqa
from .reports import *  # noqa
from .experiments import *  # noqa
from .config import parse_config  # noqa
