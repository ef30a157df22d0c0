"""Visible-light communication link simulator for an aircraft cabin."""

__version__ = "0.1.0"
