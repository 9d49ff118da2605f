"""Tests for colibri-sim."""
