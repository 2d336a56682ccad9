"""LangPFL: a small template language for fault/attack tree queries."""

from .desugar import Query, desugar
from .printer import format_expr, pretty_print
from .syntax import Script, parse_script

__all__ = ["Query", "Script", "desugar", "format_expr", "parse_script", "pretty_print"]
