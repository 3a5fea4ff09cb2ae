"""Repository package."""
