"""Visual-words lip reading: localization, signatures, recognition, applications."""

__version__ = "0.1.0"
