"""Package for loading configuration and knowledge files"""

from .config_loader import available_profiles, load_profile, parse_config
from .knowledge_loader import AblationCatalog, AblationEntry

__all__ = [
    "available_profiles",
    "load_profile",
    "parse_config",
    "AblationCatalog",
    "AblationEntry",
]
