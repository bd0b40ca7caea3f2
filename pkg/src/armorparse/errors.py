"""Exception hierarchy shared by every engine."""

from __future__ import annotations


class ArmorError(Exception):
    """Base class for all toolkit errors."""


class GrammarSyntaxError(ArmorError):
    def __init__(self, message: str, line: int, column: int):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class GrammarError(ArmorError):
    """A grammar failed validation; ``diagnostics`` holds the details."""

    def __init__(self, message: str, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


class ManifestError(ArmorError):
    pass


class TokenizeError(ArmorError):
    def __init__(self, message: str, offset: int, line: int = 0, column: int = 0):
        self.offset = offset
        self.line = line
        self.column = column
        super().__init__(message)


class DecodeError(ArmorError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(message)


class ParseError(ArmorError):
    """Document rejected.  ``context`` lists enclosing sub-language tokens, outermost first."""

    def __init__(self, message: str, offset: int | None = None, context: tuple[str, ...] = ()):
        self.message = message
        self.offset = offset
        self.context = context
        super().__init__(self._render())

    def _render(self) -> str:
        if not self.context:
            return self.message
        return " > ".join(self.context) + ": " + self.message

    def within(self, frame: str) -> "ParseError":
        err = type(self).__new__(type(self))
        err.__dict__.update(self.__dict__)
        err.context = (frame,) + self.context
        Exception.__init__(err, err._render())
        return err


class AmbiguityError(ParseError):
    pass


class DepthError(ParseError):
    pass


class UnparseError(ArmorError):
    def __init__(self, message: str, path: tuple[int, ...] = ()):
        self.path = path
        super().__init__(message)


class EncodingViolation(UnparseError):
    """Encoded token text is not accepted by the token definition; nothing was emitted."""

    def __init__(self, token: str, text: str, path: tuple[int, ...] = ()):
        self.token = token
        self.text = text
        super().__init__(
            f"post-encode validation failed for {token}: {text!r} at path {list(path)}", path
        )


class TemplateError(ArmorError):
    pass


class PathError(ArmorError):
    pass
