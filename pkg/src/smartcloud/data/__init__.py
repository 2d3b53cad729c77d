"""Packaged defaults: capability registry, image fixtures, golden files."""
