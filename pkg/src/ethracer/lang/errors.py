from __future__ import annotations


class ParseError(Exception):
    """Diagnostic raised while turning source text into a checked AST."""

    def __init__(self, message: str, line: int = 0, col: int = 0, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"{line}:{col}: " if line else ""
        extra = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{loc}{message}{extra}")


class ContractSyntaxError(ParseError):
    pass


class DuplicateName(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


class TypeMismatch(ParseError):
    pass
