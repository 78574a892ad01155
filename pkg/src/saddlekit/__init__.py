"""Saddle maps on triangulated discs."""
