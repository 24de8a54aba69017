"""Unit tests for the Hilfer solver and certifier."""
