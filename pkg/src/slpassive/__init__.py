"""Local energy and strong local passivity of finite quantum systems."""

__version__ = "0.1.0"
