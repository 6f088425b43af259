from .config import DEFAULTS, ConfigError, resolve
from .main import build_parser, main
