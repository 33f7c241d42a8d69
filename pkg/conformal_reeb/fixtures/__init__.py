"""Bundled spec files. Loaded through importlib.resources by services.spec_loader."""
