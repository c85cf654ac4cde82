"""Remote-state-preparation broadcast of restricted qubit and qutrit states."""

__version__ = "0.1.0"
