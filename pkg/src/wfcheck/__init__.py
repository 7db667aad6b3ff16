"""Workflow patterns compiled to a PROMELA-subset process model and checked."""

__version__ = "0.1.0"
