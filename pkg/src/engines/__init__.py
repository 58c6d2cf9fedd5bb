"""
Engines - localization filter and experiment harness.
"""
