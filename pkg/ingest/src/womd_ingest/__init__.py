"""Motion-dataset ingest tooling."""
__version__ = "0.1.0"
