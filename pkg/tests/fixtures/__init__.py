"""Shared builders for the simulator tests."""
