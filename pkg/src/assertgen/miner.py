"""Mining Test-Assert Pairs (TAPs) from a local corpus of Java projects."""
from __future__ import annotations

import hashlib
import logging
import random
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .jlex import Category, JavaToken, LexError, lex

log = logging.getLogger(__name__)

PLACEHOLDER = "AssertPlaceHolder"

ASSERT_NAMES = (
    "assertEquals", "assertTrue", "assertNotNull", "assertThat",
    "assertNull", "assertFalse", "assertArrayEquals", "assertSame",
)
_ASSERT_SET = frozenset(ASSERT_NAMES)
_QUALIFIERS = (("Assert", "."), ("org", ".", "junit", ".", "Assert", "."))


class MiningError(Exception):
    pass


class NoAssert(MiningError):
    pass


class MultipleAsserts(MiningError):
    pass


class EmptyDataset(ValueError):
    pass


# -- pom scanning -----------------------------------------------------------

_DEP_RE = re.compile(r"<dependency\b[^>]*>(.*?)</dependency>", re.S)


def _tag_text(block: str, tag: str) -> str | None:
    m = re.search(rf"<{tag}\b[^>]*>\s*(.*?)\s*</{tag}>", block, re.S)
    return m.group(1) if m else None


def _resolve(value: str | None, props: dict[str, str]) -> str | None:
    if value is None:
        return None
    m = re.fullmatch(r"\$\{([^}]+)\}", value.strip())
    if m:
        return props.get(m.group(1))
    return value.strip()


def _pom_properties(text: str) -> dict[str, str]:
    m = re.search(r"<properties\b[^>]*>(.*?)</properties>", text, re.S)
    if not m:
        return {}
    return {k: v.strip() for k, v in re.findall(r"<([\w.\-]+)>([^<]*)</\1>", m.group(1))}


def scan_pom(pom_text: str) -> bool:
    """True iff the pom declares junit:junit with a version starting "4."."""
    try:
        ET.fromstring(pom_text)
    except ET.ParseError as exc:
        # Only a textual scan is required; a broken document is still read
        # if its dependency blocks are recoverable.
        log.warning("malformed pom (%s); falling back to textual scan", exc)
    props = _pom_properties(pom_text)
    blocks = _DEP_RE.findall(pom_text)
    if not blocks:
        return False
    for block in blocks:
        group = _resolve(_tag_text(block, "groupId"), props)
        artifact = _resolve(_tag_text(block, "artifactId"), props)
        version = _resolve(_tag_text(block, "version"), props)
        if group == "junit" and artifact == "junit" and version and version.startswith("4."):
            return True
    return False


# -- method extraction ------------------------------------------------------

@dataclass
class MethodRecord:
    """One declared method.  ``body_tokens`` runs from the method name to the
    closing brace, i.e. the signature followed by the body."""

    signature: str
    name: str
    arity: int
    body_tokens: list[JavaToken]
    is_test: bool
    project_id: str
    path: str = ""

    @property
    def lexemes(self) -> list[str]:
        return [t.lexeme for t in self.body_tokens]


@dataclass
class ExtractionResult:
    methods: list[MethodRecord] = field(default_factory=list)
    skipped_files: dict[str, str] = field(default_factory=dict)

    @property
    def tests(self) -> list[MethodRecord]:
        return [m for m in self.methods if m.is_test]

    @property
    def pool(self) -> list[MethodRecord]:
        return [m for m in self.methods if not m.is_test]


def _match_close(toks: Sequence[JavaToken], i: int, open_: str, close: str) -> int:
    depth = 0
    for j in range(i, len(toks)):
        lx = toks[j].lexeme
        if lx == open_:
            depth += 1
        elif lx == close:
            depth -= 1
            if depth == 0:
                return j
    return -1


def _split_top_level(toks: Sequence[JavaToken]) -> list[list[JavaToken]]:
    """Split tokens on commas not nested in (), [], {} or <>."""
    parts: list[list[JavaToken]] = [[]]
    depth = 0
    for t in toks:
        lx = t.lexeme
        if lx in ("(", "[", "{", "<"):
            depth += 1
        elif lx in (")", "]", "}", ">"):
            depth -= 1
        elif lx in (">>", ">>>"):
            depth -= len(lx)
        if lx == "," and depth == 0:
            parts.append([])
        else:
            parts[-1].append(t)
    return [p for p in parts if p]


def _param_types(params: Sequence[JavaToken]) -> list[str]:
    types = []
    for part in _split_top_level(params):
        words = [t.lexeme for t in part if t.category is not Category.ANNOTATION and t.lexeme != "final"]
        types.append("".join(words[:-1]) if len(words) > 1 else "".join(words))
    return types


def _annotation_names(toks: Sequence[JavaToken], start: int, end: int) -> list[str]:
    names = []
    i = start
    while i < end:
        t = toks[i]
        if t.category is Category.ANNOTATION:
            name = t.lexeme[1:]
            j = i + 1
            while j + 1 < end and toks[j].lexeme == "." and toks[j + 1].category in (Category.IDENT, Category.TYPE_NAME, Category.METHOD):
                name += "." + toks[j + 1].lexeme
                j += 2
            names.append(name)
            i = j
        else:
            i += 1
    return names


def extract_file_methods(tokens: Sequence[JavaToken], project_id: str = "", path: str = "") -> list[MethodRecord]:
    """Find method declarations that sit directly in a class body.

    Bodies of methods (including anonymous classes inside them) are skipped
    as a unit, so only member-level declarations are returned.
    """
    out: list[MethodRecord] = []
    stack: list[str] = []  # 'class' or 'block'
    member_start = 0
    pending_class = False
    i, n = 0, len(tokens)
    while i < n:
        t = tokens[i]
        lx = t.lexeme
        in_class = bool(stack) and stack[-1] == "class"
        if lx in ("class", "interface", "enum") and t.category is Category.KEYWORD:
            pending_class = True
        elif lx == "{":
            stack.append("class" if pending_class else "block")
            pending_class = False
            member_start = i + 1
        elif lx == "}":
            if stack:
                stack.pop()
            member_start = i + 1
        elif lx == ";":
            member_start = i + 1
        elif (
            in_class
            and not pending_class
            and t.category is Category.METHOD
            and (i == 0 or tokens[i - 1].lexeme != ".")
        ):
            close = _match_close(tokens, i + 1, "(", ")")
            if close < 0:
                break
            j = close + 1
            if j < n and tokens[j].lexeme == "throws":
                while j < n and tokens[j].lexeme not in ("{", ";"):
                    j += 1
            if j < n and tokens[j].lexeme == "{":
                end = _match_close(tokens, j, "{", "}")
                if end < 0:
                    break
                params = _param_types(tokens[i + 2:close])
                annotations = _annotation_names(tokens, member_start, i)
                is_test = any(a in ("Test", "org.junit.Test") for a in annotations)
                out.append(
                    MethodRecord(
                        signature=f"{lx}({','.join(params)})",
                        name=lx,
                        arity=len(params),
                        body_tokens=list(tokens[i:end + 1]),
                        is_test=is_test,
                        project_id=project_id,
                        path=path,
                    )
                )
                i = end + 1
                member_start = i
                continue
            # abstract / interface method: skip to the terminating ';'
            i = j
            continue
        i += 1
    return out


def extract_methods(project_files: Iterable[Path | str], project_id: str = "", root: Path | None = None) -> ExtractionResult:
    """Extract test and pool methods from a project's Java files.

    Files are processed in sorted path order; lexing failures are recorded in
    ``skipped_files`` and never abort extraction.
    """
    result = ExtractionResult()
    for f in sorted(Path(p) for p in project_files):
        rel = str(f.relative_to(root)) if root else str(f)
        try:
            tokens = lex(f.read_text(encoding="utf-8", errors="replace"))
        except LexError as exc:
            log.info("skipping %s: %s", rel, exc)
            result.skipped_files[rel] = str(exc)
            continue
        result.methods.extend(extract_file_methods(tokens, project_id, rel))
    return result


# -- asserts and focal methods ---------------------------------------------

@dataclass(frozen=True)
class Call:
    name: str
    arity: int
    start: int   # index of the name token
    close: int   # index of the closing parenthesis


def find_calls(tokens: Sequence[JavaToken]) -> list[Call]:
    calls = []
    for i, t in enumerate(tokens):
        if t.category is Category.METHOD:
            close = _match_close(tokens, i + 1, "(", ")")
            if close < 0:
                continue
            calls.append(Call(t.lexeme, len(_split_top_level(tokens[i + 2:close])), i, close))
    return calls


def find_asserts(tokens: Sequence[JavaToken]) -> list[tuple[int, int]]:
    """Spans ``(start, close)`` of JUnit-4 assert calls, including any
    ``Assert.`` / ``org.junit.Assert.`` qualifier; ``close`` is the index of
    the call's closing parenthesis."""
    spans = []
    lexs = [t.lexeme for t in tokens]
    for c in find_calls(tokens):
        if c.name not in _ASSERT_SET:
            continue
        start = c.start
        for q in sorted(_QUALIFIERS, key=len, reverse=True):
            k = len(q)
            if start >= k and tuple(lexs[start - k:start]) == q:
                start -= k
                break
        spans.append((start, c.close))
    return spans


def _single_assert(test: MethodRecord) -> tuple[int, int]:
    spans = find_asserts(test.body_tokens)
    if not spans:
        raise NoAssert(test.signature)
    if len(spans) > 1:
        raise MultipleAsserts(test.signature)
    return spans[0]


def _pool_index(pool: Iterable[MethodRecord]) -> dict[tuple[str, int], list[MethodRecord]]:
    index: dict[tuple[str, int], list[MethodRecord]] = {}
    for m in pool:
        if not m.is_test:
            index.setdefault((m.name, m.arity), []).append(m)
    return index


def _pick(candidates: list[MethodRecord], test: MethodRecord) -> MethodRecord:
    return min(candidates, key=lambda m: (m.path != test.path, m.path, m.signature, m.lexemes))


def find_focal_method(test: MethodRecord, pool: Iterable[MethodRecord]) -> MethodRecord | None:
    """Pick the method under test for a single-assert test.

    A pool-matching call inside the assert arguments wins; otherwise the last
    pool-matching call before the assert.  "Last" is by closing parenthesis,
    so for nested calls on one statement the outermost call is chosen.
    """
    start, close = _single_assert(test)
    index = _pool_index(pool)
    calls = [c for c in find_calls(test.body_tokens) if (c.name, c.arity) in index]
    # The test method's own declaration appears as the first METHOD token.
    calls = [c for c in calls if c.start != 0]
    inside = [c for c in calls if start < c.start and c.close < close and c.name not in _ASSERT_SET]
    before = [c for c in calls if c.close < start]
    chosen = max(inside or before, key=lambda c: c.close, default=None)
    if chosen is None:
        return None
    return _pick(index[(chosen.name, chosen.arity)], test)


# -- TAP assembly -----------------------------------------------------------

def tap_id(context: Sequence[str], target: Sequence[str]) -> str:
    h = hashlib.sha256()
    h.update(" ".join(context).encode("utf-8"))
    h.update(b"\x00")
    h.update(" ".join(target).encode("utf-8"))
    return h.hexdigest()[:16]


@dataclass
class TapRecord:
    context_tokens: list[str]
    target_tokens: list[str]
    focal_signature: str | None = None
    id: str = ""
    test_length: int = 0  # number of context tokens belonging to the test method

    def __post_init__(self):
        if not self.id:
            self.id = tap_id(self.context_tokens, self.target_tokens)
        if not self.test_length:
            self.test_length = len(self.context_tokens)

    @property
    def test_tokens(self) -> list[str]:
        return self.context_tokens[: self.test_length]

    @property
    def focal_tokens(self) -> list[str]:
        return self.context_tokens[self.test_length:]


def assemble_tap(test: MethodRecord, focal: MethodRecord | None) -> TapRecord:
    start, close = _single_assert(test)
    lexs = test.lexemes
    target = lexs[start:close + 1]
    context = lexs[:start] + [PLACEHOLDER] + lexs[close + 1:]
    test_len = len(context)
    if focal is not None:
        context = context + focal.lexemes
    return TapRecord(
        context_tokens=context,
        target_tokens=target,
        focal_signature=focal.signature if focal is not None else None,
        test_length=test_len,
    )


def restore_test(tap: TapRecord) -> list[str]:
    """Put the target back in place of the placeholder (test part only)."""
    test = tap.test_tokens
    k = test.index(PLACEHOLDER)
    return test[:k] + list(tap.target_tokens) + test[k + 1:]


# -- filtering and splitting ------------------------------------------------

@dataclass
class FilterReport:
    input_count: int = 0
    removed_long: int = 0
    removed_unknown: int = 0
    removed_duplicate: int = 0
    kept: int = 0

    def balanced(self) -> bool:
        return self.input_count == self.removed_long + self.removed_unknown + self.removed_duplicate + self.kept


def filter_taps(taps: Sequence[TapRecord], vocab, max_context_tokens: int = 1000) -> tuple[list[TapRecord], FilterReport]:
    """Apply the length, unknown-token and duplicate filters in that order.

    ``vocab`` is anything supporting ``in`` on lexemes (a Vocabulary or set).
    """
    report = FilterReport(input_count=len(taps))
    seen: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    kept = []
    for tap in taps:
        if len(tap.context_tokens) > max_context_tokens:
            report.removed_long += 1
            continue
        ctx = set(tap.context_tokens)
        if any(t not in vocab and t not in ctx for t in tap.target_tokens):
            report.removed_unknown += 1
            continue
        key = (tuple(tap.context_tokens), tuple(tap.target_tokens))
        if key in seen:
            report.removed_duplicate += 1
            continue
        seen.add(key)
        kept.append(tap)
    report.kept = len(kept)
    return kept, report


def split_dataset(taps: Sequence, ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0):
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must be three non-negative values summing to 1, got {ratios}")
    n = len(taps)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = round(n * ratios[0])
    n_val = min(round(n * ratios[1]), n - n_train)
    idx = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    return tuple([taps[i] for i in sorted(part)] for part in idx)


# -- corpus driver ----------------------------------------------------------

@dataclass
class MiningStats:
    projects: int = 0
    projects_skipped_pom: int = 0
    files_skipped: int = 0
    tests: int = 0
    no_assert: int = 0
    multiple_asserts: int = 0
    with_focal: int = 0


def project_dirs(corpus_dir: Path) -> list[Path]:
    """Each immediate subdirectory is one project; a corpus with Java files
    but no subdirectories is treated as a single project."""
    corpus_dir = Path(corpus_dir)
    subs = sorted(p for p in corpus_dir.iterdir() if p.is_dir())
    if subs:
        return subs
    return [corpus_dir] if any(corpus_dir.rglob("*.java")) else []


def mine_project(project: Path, require_junit4: bool, stats: MiningStats) -> list[TapRecord]:
    pom = project / "pom.xml"
    if require_junit4 and not (pom.exists() and scan_pom(pom.read_text(encoding="utf-8", errors="replace"))):
        stats.projects_skipped_pom += 1
        return []
    stats.projects += 1
    files = sorted(project.rglob("*.java"))
    result = extract_methods(files, project_id=project.name, root=project)
    stats.files_skipped += len(result.skipped_files)
    pool = result.pool
    taps = []
    for test in result.tests:
        stats.tests += 1
        try:
            focal = find_focal_method(test, pool)
            tap = assemble_tap(test, focal)
        except NoAssert:
            stats.no_assert += 1
            continue
        except MultipleAsserts:
            stats.multiple_asserts += 1
            continue
        stats.with_focal += focal is not None
        taps.append(tap)
    return taps


def mine_corpus(corpus_dir: Path, require_junit4: bool = False) -> tuple[list[TapRecord], MiningStats]:
    stats = MiningStats()
    taps: list[TapRecord] = []
    for project in project_dirs(Path(corpus_dir)):
        taps.extend(mine_project(project, require_junit4, stats))
    return taps, stats
