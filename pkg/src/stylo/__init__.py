"""Native-language identification through stylometric n-gram features."""

__version__ = "0.1.0"
