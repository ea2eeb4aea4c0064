"""Bundled scene configurations."""
