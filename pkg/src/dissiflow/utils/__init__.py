"""
Utility modules for dissiflow.
"""

from .formatters import SummaryFormatter

__all__ = ["SummaryFormatter"]
