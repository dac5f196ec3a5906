"""Risk behavior quotients from geo-tagged, time-stamped posts."""

__version__ = "0.1.0"
CONFIG_SCHEMA_VERSION = "1"
