"""Typed, enriched metagraphs with pattern matching, graph rewriting and an
evaluator for a small S-expression language."""

from .enrichments import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .interpreter import *  # noqa: F401,F403
from .matcher import *  # noqa: F401,F403
from .metagraph import *  # noqa: F401,F403
from .rewrite import *  # noqa: F401,F403
from .syntax import *  # noqa: F401,F403
from .trace import *  # noqa: F401,F403
from .typesystem import *  # noqa: F401,F403

__version__ = "0.1.0"
