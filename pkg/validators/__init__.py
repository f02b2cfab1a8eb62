"""Validators"""
from .law_comparators import LawComparison, compare_laws, total_variation

__all__ = ['LawComparison', 'compare_laws', 'total_variation']
