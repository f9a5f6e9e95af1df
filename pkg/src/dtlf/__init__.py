"""Refinement type checking and temporal specifications for a small
call-by-name language with recursive types, decided through finite
elements of Scott domains."""

__version__ = "0.1.0"
