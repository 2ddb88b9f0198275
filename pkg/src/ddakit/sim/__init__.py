"""Deterministic wave-arena simulator used to exercise the adjustment engine."""
