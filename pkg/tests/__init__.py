"""Module containing all tests."""
