"""Mine disease misdiagnosis pairs from MEDLINE titles into a weighted directed graph."""

__version__ = "0.1.0"
