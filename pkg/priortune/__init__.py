"""Prior-guided parameter-efficient fine-tuning for binary segmentation."""

from .utils import *
from .core import *

__version__ = "0.1.0"
