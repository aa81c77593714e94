"""Experiment drivers and the ``sglu`` command line."""
