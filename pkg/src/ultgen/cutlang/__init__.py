"""CUT-lang front end: lexer, parser, AST nodes, canonical printer."""

from .lexer import Token, tokenize
from .nodes import (
    INT_MAX,
    INT_MIN,
    Assert,
    Assign,
    Binary,
    Block,
    BoolLit,
    CallExpr,
    ClassDecl,
    DependencyRef,
    Expr,
    ExternDecl,
    FieldDecl,
    FieldRef,
    FloatLit,
    If,
    IntLit,
    MethodDecl,
    Param,
    ParamRef,
    RefType,
    Return,
    SourceUnit,
    Span,
    Stmt,
    TestBlock,
    Unary,
    While,
    walk,
)
from .parser import list_dependencies, parse_source
from .printer import print_class, print_expr, print_method, print_unit

__all__ = [
    "INT_MAX",
    "INT_MIN",
    "Assert",
    "Assign",
    "Binary",
    "Block",
    "BoolLit",
    "CallExpr",
    "ClassDecl",
    "DependencyRef",
    "Expr",
    "ExternDecl",
    "FieldDecl",
    "FieldRef",
    "FloatLit",
    "If",
    "IntLit",
    "MethodDecl",
    "Param",
    "ParamRef",
    "RefType",
    "Return",
    "SourceUnit",
    "Span",
    "Stmt",
    "TestBlock",
    "Token",
    "Unary",
    "While",
    "list_dependencies",
    "parse_source",
    "print_class",
    "print_expr",
    "print_method",
    "print_unit",
    "tokenize",
    "walk",
]
