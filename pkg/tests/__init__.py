"""
Test package for the Hellmann potential toolkit.
"""
