"""Knowledge-base driven adhesive selection: model, parser, inference,
cDMN compilation, catalog, consultant service."""

__version__ = "0.1.0"
