"""Tests for brentcast."""
