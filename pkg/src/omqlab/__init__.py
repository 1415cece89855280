"""Ontology-mediated querying toolkit: chase construction, three evaluation
pipelines, semantic tree-likeness decisions, and DL-Lite(F) rewriting."""

__version__ = "0.1.0"
