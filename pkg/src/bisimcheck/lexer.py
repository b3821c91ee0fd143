"""Tokenizer shared by the functor, expression, process and spec-file parsers."""

from dataclasses import dataclass

from .errors import ParseError

# Multi-character symbols must come before their prefixes.
_SYMBOLS = (
    "(+)", "->",
    "{", "}", "(", ")", "[", "]", "<", ">",
    ";", ":", "=", ",", ".", "!", "^", "+",
)


def _ident_char(c):
    return c.isalnum() or c == "_"


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "string" | "sym" | "eof"
    text: str
    line: int
    col: int


def tokenize(text):
    """Split ``text`` into tokens; ``#`` starts a comment running to end of line."""
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise ParseError("unterminated string literal", line, col)
            tokens.append(Token("string", text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if _ident_char(c):
                j = i
                while j < n and _ident_char(text[j]):
                    j += 1
                tokens.append(Token("ident", text[i:j], line, col))
                col += j - i
                i = j
            else:
                raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    """Cursor over a token list with the usual peek/expect helpers."""

    def __init__(self, tokens):
        self._tokens = tokens
        self.pos = 0

    def peek(self, ahead=0):
        return self._tokens[min(self.pos + ahead, len(self._tokens) - 1)]

    def next(self):
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_sym(self, text):
        tok = self.peek()
        return tok.kind == "sym" and tok.text == text

    def at_ident(self, text=None):
        tok = self.peek()
        return tok.kind == "ident" and (text is None or tok.text == text)

    def at_eof(self):
        return self.peek().kind == "eof"

    def expect_sym(self, text):
        if not self.at_sym(text):
            self.error(f"expected {text!r}")
        return self.next()

    def expect_ident(self, what="identifier"):
        if not self.at_ident():
            self.error(f"expected {what}")
        return self.next().text

    def expect_eof(self):
        if not self.at_eof():
            self.error("expected end of input")

    def error(self, message):
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col)


def stream(text):
    return TokenStream(tokenize(text))
