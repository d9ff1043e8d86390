"""
Report writers for dissiflow.
"""

from .writers import ReportBundle, ReportWriter

__all__ = ["ReportBundle", "ReportWriter"]
