"""
Utility functions
"""

from .presets import PresetManager

__all__ = ['PresetManager']
