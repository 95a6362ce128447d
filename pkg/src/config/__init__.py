"""Configuration module"""

from .models import RunConfig, Settings, Subcommand, get_settings

__all__ = ["RunConfig", "Settings", "Subcommand", "get_settings"]
