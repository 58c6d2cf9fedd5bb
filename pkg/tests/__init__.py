"""
Tests for GP-Localize.
"""
