"""Lexical analysis of Java 8 source into categorized tokens.

Lexing happens in two phases.  ``scan`` splits text into raw lexemes
(dropping whitespace and comments) and ``classify`` assigns each lexeme one
category using the lexeme itself plus a small amount of lookahead.  Because
``classify`` only looks at lexemes, re-lexing a space-joined stream always
reproduces the same categories.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class Category(str, enum.Enum):
    KEYWORD = "KEYWORD"
    IDENT = "IDENT"
    METHOD = "METHOD"
    TYPE_NAME = "TYPE_NAME"
    ANNOTATION = "ANNOTATION"
    INT_LIT = "INT_LIT"
    LONG_LIT = "LONG_LIT"
    FLOAT_LIT = "FLOAT_LIT"
    DOUBLE_LIT = "DOUBLE_LIT"
    CHAR_LIT = "CHAR_LIT"
    STRING_LIT = "STRING_LIT"
    BOOL_LIT = "BOOL_LIT"
    NULL_LIT = "NULL_LIT"
    OPERATOR = "OPERATOR"
    SEPARATOR = "SEPARATOR"


# Categories that carry program-specific content and are candidates for
# abstraction.  Keywords, operators and separators are structural.
ABSTRACTABLE = frozenset(
    c for c in Category if c not in (Category.KEYWORD, Category.OPERATOR, Category.SEPARATOR)
)

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

PRIMITIVES = frozenset("boolean byte char double float int long short void".split())

SEPARATORS = ("...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@")

OPERATORS = (
    ">>>=", "<<=", ">>=", ">>>", "->", "==", "<=", ">=", "!=", "&&", "||",
    "++", "--", "<<", ">>", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=",
    "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
)


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


class UnterminatedLiteral(LexError):
    pass


class IllegalCharacter(LexError):
    pass


@dataclass(frozen=True)
class JavaToken:
    lexeme: str
    category: Category
    line: int
    col: int

    def __post_init__(self):
        if not self.lexeme:
            raise ValueError("empty lexeme")


_IDENT = r"(?:[^\W\d]|\$)(?:\w|\$)*"
_EXP = r"[eE][+-]?\d[\d_]*"
_FLOAT_BODY = (
    rf"(?:\d[\d_]*\.(?:\d[\d_]*)?(?:{_EXP})?"
    rf"|\.\d[\d_]*(?:{_EXP})?"
    rf"|\d[\d_]*{_EXP})"
)

_TOKEN_RE = re.compile(
    "|".join(
        [
            r"(?P<ws>\s+)",
            r"(?P<line_comment>//[^\n]*)",
            r"(?P<block_comment>/\*.*?\*/)",
            r'(?P<string>"(?:[^"\\\n]|\\.)*")',
            r"(?P<char>'(?:[^'\\\n]|\\[^\n]+?)')",
            rf"(?P<float>{_FLOAT_BODY}[fFdD]?|\d[\d_]*[fFdD])",
            r"(?P<int>0[xX][0-9a-fA-F_]+[lL]?|0[bB][01_]+[lL]?|\d[\d_]*[lL]?)",
            rf"(?P<annotation>@(?!interface\b){_IDENT})",
            rf"(?P<ident>{_IDENT})",
            "(?P<op>" + "|".join(re.escape(o) for o in sorted(SEPARATORS + OPERATORS, key=len, reverse=True)) + ")",
        ]
    ),
    re.DOTALL,
)

_LITERAL_RES = [
    (re.compile(r'"(?:[^"\\\n]|\\.)*"'), Category.STRING_LIT),
    (re.compile(r"'(?:[^'\\\n]|\\[^\n]+?)'"), Category.CHAR_LIT),
    (re.compile(rf"(?:{_FLOAT_BODY}|\d[\d_]*)[fF]"), Category.FLOAT_LIT),
    (re.compile(rf"{_FLOAT_BODY}[dD]?|\d[\d_]*[dD]"), Category.DOUBLE_LIT),
    (re.compile(r"(?:0[xX][0-9a-fA-F_]+|0[bB][01_]+|\d[\d_]*)[lL]"), Category.LONG_LIT),
    (re.compile(r"0[xX][0-9a-fA-F_]+|0[bB][01_]+|\d[\d_]*"), Category.INT_LIT),
]
_IDENT_RE = re.compile(_IDENT)
_ANNOTATION_RE = re.compile(rf"@{_IDENT}")


def scan(source: str) -> list[tuple[str, int, int]]:
    """Split source into ``(lexeme, line, col)`` triples, dropping trivia."""
    out = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is not None and m.lastgroup == "op" and source.startswith("/*", pos):
            # the block-comment alternative failed, so the comment never closes
            raise UnterminatedLiteral("unterminated comment", line, col)
        if m is None:
            ch = source[pos]
            if ch in "\"'":
                raise UnterminatedLiteral(f"unterminated {ch} literal", line, col)
            raise IllegalCharacter(f"illegal character {ch!r}", line, col)
        text = m.group()
        if m.lastgroup not in ("ws", "line_comment", "block_comment"):
            out.append((text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    return out


def lexeme_kind(lexeme: str) -> Category:
    """Context-free category of a single lexeme (identifiers map to IDENT)."""
    if lexeme in KEYWORDS:
        return Category.KEYWORD
    if lexeme in ("true", "false"):
        return Category.BOOL_LIT
    if lexeme == "null":
        return Category.NULL_LIT
    if lexeme in SEPARATORS:
        return Category.SEPARATOR
    if lexeme in OPERATORS:
        return Category.OPERATOR
    if _ANNOTATION_RE.fullmatch(lexeme):
        return Category.ANNOTATION
    if _IDENT_RE.fullmatch(lexeme):
        return Category.IDENT
    for rx, cat in _LITERAL_RES:
        if rx.fullmatch(lexeme):
            return cat
    # Lexemes outside the scanner's alphabet (e.g. "AssertPlaceHolder" is fine,
    # but synthetic markers may not be) are treated as identifiers.
    return Category.IDENT


_GENERIC_OK = frozenset([",", ".", "?", "&", "[", "]", "extends", "super"]) | PRIMITIVES
_CAST_FOLLOW = frozenset(["(", "new", "this", "super", "!", "~"])
_TYPE_AFTER = frozenset(["new", "instanceof", "extends", "implements", "throws", "class", "interface", "enum"])


def _generic_close(lexemes: Sequence[str], i: int) -> int | None:
    """If lexemes[i] == "<" opens a type-argument list, return the index of
    the token that closes it, else None."""
    depth = 0
    for j in range(i, min(len(lexemes), i + 64)):
        t = lexemes[j]
        if t == "<":
            depth += 1
        elif t in (">", ">>", ">>>"):
            depth -= len(t)
            if depth <= 0:
                return j if depth == 0 else None
        elif t in _GENERIC_OK or _ANNOTATION_RE.fullmatch(t):
            continue
        elif lexeme_kind(t) is Category.IDENT:
            continue
        else:
            return None
    return None


def _is_ident(lexemes: Sequence[str], j: int) -> bool:
    return 0 <= j < len(lexemes) and lexeme_kind(lexemes[j]) is Category.IDENT


def classify(tokens: Iterable[str | JavaToken | tuple[str, int, int]]) -> list[JavaToken]:
    """Assign categories to a lexeme sequence.

    Accepts plain strings (positions are synthesized as if the lexemes were
    joined by single spaces on one line), ``JavaToken`` objects, or the
    ``(lexeme, line, col)`` triples produced by ``scan``.
    """
    items = []
    col = 1
    for t in tokens:
        if isinstance(t, JavaToken):
            items.append((t.lexeme, t.line, t.col))
        elif isinstance(t, str):
            items.append((t, 1, col))
            col += len(t) + 1
        else:
            items.append(tuple(t))
    lexemes = [it[0] for it in items]
    cats = [lexeme_kind(x) for x in lexemes]
    n = len(lexemes)

    generic_types: set[int] = set()
    i = 0
    while i < n:
        if lexemes[i] == "<" and i > 0 and cats[i - 1] is Category.IDENT:
            close = _generic_close(lexemes, i)
            if close is not None:
                generic_types.add(i - 1)
                generic_types.update(j for j in range(i + 1, close) if cats[j] is Category.IDENT)
                i = close
        i += 1

    for i in range(n):
        if cats[i] is not Category.IDENT:
            continue
        prev = lexemes[i - 1] if i > 0 else None
        nxt = lexemes[i + 1] if i + 1 < n else None
        if nxt == "(" and prev != "new":
            cats[i] = Category.METHOD
        elif prev in _TYPE_AFTER or i in generic_types:
            cats[i] = Category.TYPE_NAME
        elif _is_ident(lexemes, i + 1) or nxt == "...":
            cats[i] = Category.TYPE_NAME
        elif nxt == "[" and _array_type_follows(lexemes, i + 1):
            cats[i] = Category.TYPE_NAME
        elif nxt == "." and i + 2 < n and lexemes[i + 2] == "class":
            cats[i] = Category.TYPE_NAME
        elif prev == "(" and nxt == ")" and i + 2 < n and _casts_onto(lexemes[i + 2]):
            cats[i] = Category.TYPE_NAME
    return [JavaToken(lex, cat, line, c) for (lex, line, c), cat in zip(items, cats)]


def _array_type_follows(lexemes: Sequence[str], j: int) -> bool:
    n = len(lexemes)
    while j + 1 < n and lexemes[j] == "[" and lexemes[j + 1] == "]":
        j += 2
    return j < n and (lexemes[j] == "..." or _is_ident(lexemes, j)) and lexemes[j - 1] == "]"


def _casts_onto(lexeme: str) -> bool:
    kind = lexeme_kind(lexeme)
    if lexeme in _CAST_FOLLOW:
        return True
    return kind is Category.IDENT or kind in (
        Category.STRING_LIT, Category.CHAR_LIT, Category.INT_LIT, Category.LONG_LIT,
        Category.FLOAT_LIT, Category.DOUBLE_LIT, Category.BOOL_LIT, Category.NULL_LIT,
    )


def lex(source: str) -> list[JavaToken]:
    """Lex Java source into a classified token stream."""
    return classify(scan(source))


def lexemes(tokens: Iterable[JavaToken]) -> list[str]:
    return [t.lexeme for t in tokens]
