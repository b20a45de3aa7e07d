"""Text format, expression parser, generator and command line."""

from .exprs import parse_kernel_expr
from .generate import GenConfig, generate_model_instance
from .spec_format import ParseError, SpecDocument, parse_spec, print_spec

__all__ = ["GenConfig", "ParseError", "SpecDocument", "generate_model_instance", "parse_kernel_expr",
           "parse_spec", "print_spec"]
