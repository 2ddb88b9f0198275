"""Adjustment models: strategies that turn assessments into change requests."""
