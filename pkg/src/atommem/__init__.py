"""atommem: atomic CRUD memory for agents reading long documents in chunks."""

__version__ = "0.1.0"
