"""Shared helpers: output formatting, logging, file formats."""
