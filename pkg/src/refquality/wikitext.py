"""Wikitext parsing: sections, sentences, citation markers, referenced domains.

A single linear scan per section strips markup (templates, tables, comments,
tags, link syntax) while recording where citation markers — ``<ref>`` tags and
citation templates — stood in the cleaned text.  Sentences are then split on
terminal punctuation with an abbreviation guard, and each marker is attributed
to the sentence it follows.
"""

from __future__ import annotations

import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Optional, Sequence

from .domains import normalize_domain

Position = tuple[int, int]


@dataclass(frozen=True)
class Sentence:
    """A segmented sentence with its inline-citation flag."""

    text: str
    section_title: str
    paragraph: str
    has_citation: int
    position: Position


@dataclass(frozen=True)
class ExtractedReference:
    """A referenced URL reduced to its registrable domain."""

    raw_url: str
    domain: str
    sentence_position: Optional[Position] = None


@dataclass(frozen=True)
class ParsedArticle:
    sentences: tuple[Sentence, ...]
    references: tuple[ExtractedReference, ...]
    section_titles: tuple[str, ...]
    skipped_urls: int


def _load_lines(name: str) -> tuple[str, ...]:
    text = resources.files("refquality.data").joinpath(name).read_text("utf-8")
    return tuple(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def default_excluded_sections() -> frozenset[str]:
    return frozenset(t.lower() for t in _load_lines("excluded_sections.txt"))


def default_abbreviations() -> frozenset[str]:
    return frozenset(t.lower() for t in _load_lines("abbreviations.txt"))


_HEADING_RE = re.compile(r"^(={2,6})[ \t]*(.*?)[ \t]*=+[ \t]*$", re.MULTILINE)
_SPECIAL_RE = re.compile(r"<!--|\{\||\{\{|\[\[|\[|<|''|(?:https?|ftp)://|\r")
_TAG_RE = re.compile(r"</?([a-zA-Z][a-zA-Z0-9]*)\b[^<>]*?(/?)>")
_URL_PARAM_RE = re.compile(r"\|\s*url\s*=\s*([^\s|<>{}\[\]]+)", re.IGNORECASE)
_BARE_URL_RE = re.compile(r"(?:https?|ftp)://[^\s<>\[\]{}|\"']+")
_BOUNDARY_RE = re.compile(r"[.!?]+[)\"'”’\]]*[ \t\n]+")
_LIST_PREFIX_RE = re.compile(r"^[*#:;\s]+")
_WORD_BEFORE_RE = re.compile(r"([A-Za-z][A-Za-z.]*)$")

# Tags whose content is dropped wholesale (never prose, never citations).
_SKIP_TAGS = frozenset(
    {"nowiki", "math", "gallery", "timeline", "pre", "source", "syntaxhighlight",
     "score", "graph", "mapframe", "hiero", "chem", "imagemap", "templatedata"}
)
_MEDIA_PREFIXES = ("file:", "image:", "category:", "media:")


def _is_citation_template(name: str) -> bool:
    name = name.strip().lower()
    return (
        name == "citation"
        or name.startswith("cite")
        or name.startswith("sfn")
        or name in {"harvnb", "harv", "harvp", "refn", "r"}
    )


def _strip_url(url: str) -> str:
    return url.rstrip(".,;:!?)")


def _urls_in_blob(text: str) -> list[str]:
    """URLs in ``text`` in document order: url= parameters plus bare links."""
    hits: list[tuple[int, str]] = []
    param_spans = []
    for m in _URL_PARAM_RE.finditer(text):
        hits.append((m.start(1), _strip_url(m.group(1))))
        param_spans.append((m.start(1), m.end(1)))
    for m in _BARE_URL_RE.finditer(text):
        if any(s <= m.start() < e for s, e in param_spans):
            continue
        hits.append((m.start(), _strip_url(m.group())))
    hits.sort(key=lambda h: h[0])
    return [u for _, u in hits if u.startswith(("http://", "https://", "ftp://"))]


def _find_matching(text: str, start: int, open_tok: str, close_tok: str) -> int:
    """Index just past the ``close_tok`` matching the ``open_tok`` at ``start``."""
    depth = 1
    i = start + len(open_tok)
    while i < len(text):
        if text.startswith(open_tok, i):
            depth += 1
            i += len(open_tok)
        elif text.startswith(close_tok, i):
            depth -= 1
            i += len(close_tok)
            if depth == 0:
                return i
        else:
            i += 1
    return len(text)


@dataclass
class _CleanSection:
    title: str
    text: str = ""
    markers: tuple[int, ...] = ()
    # (raw_url, marker offset in cleaned text or None when unanchored)
    raw_refs: tuple[tuple[str, Optional[int]], ...] = ()


def _clean(body: str) -> _CleanSection:
    out: list[str] = []
    out_len = 0
    markers: list[int] = []
    raw_refs: list[tuple[str, Optional[int]]] = []
    i = 0
    n = len(body)

    def emit(chunk: str):
        nonlocal out_len
        out.append(chunk)
        out_len += len(chunk)

    while i < n:
        m = _SPECIAL_RE.search(body, i)
        if m is None:
            emit(body[i:])
            break
        if m.start() > i:
            emit(body[i : m.start()])
            i = m.start()
        tok = m.group()

        if tok == "<!--":
            end = body.find("-->", i + 4)
            i = n if end < 0 else end + 3

        elif tok == "{|":
            end = _find_matching(body, i, "{|", "|}")
            raw_refs.extend((u, None) for u in _urls_in_blob(body[i:end]))
            i = end

        elif tok == "{{":
            end = _find_matching(body, i, "{{", "}}")
            inner = body[i + 2 : end - 2 if body.endswith("}}", end - 2, end) else end]
            name = inner.split("|", 1)[0]
            if _is_citation_template(name):
                markers.append(out_len)
                raw_refs.extend((u, out_len) for u in _urls_in_blob(inner))
            else:
                raw_refs.extend((u, None) for u in _urls_in_blob(inner))
            i = end

        elif tok == "[[":
            end = _find_matching(body, i, "[[", "]]")
            inner = body[i + 2 : end - 2 if body.endswith("]]", end - 2, end) else end]
            if inner.lstrip(":").lower().startswith(_MEDIA_PREFIXES):
                raw_refs.extend((u, None) for u in _urls_in_blob(inner))
            else:
                display = inner.rsplit("|", 1)[-1]
                emit(display.replace("[[", "").replace("]]", ""))
            i = end

        elif tok == "[":
            um = _BARE_URL_RE.match(body, i + 1)
            if um:
                end = body.find("]", um.end())
                if end < 0:
                    end = um.end()
                label = body[um.end() : end].strip()
                raw_refs.append((_strip_url(um.group()), None))
                if label:
                    emit(label)
                i = end + 1 if end < n and body[end] == "]" else end
            else:
                emit("[")
                i += 1

        elif tok == "<":
            low = body[i : i + 5].lower()
            if low.startswith("<ref") and (len(low) < 5 or low[4] in " >/\t\n"):
                gt = body.find(">", i)
                if gt < 0:
                    i = n
                    continue
                markers.append(out_len)
                if body[gt - 1] == "/":
                    i = gt + 1  # self-closing named reuse, no content
                else:
                    close = body.find("</ref", gt + 1)
                    content_end = close if close >= 0 else n
                    raw_refs.extend(
                        (u, out_len) for u in _urls_in_blob(body[gt + 1 : content_end])
                    )
                    if close < 0:
                        i = n
                    else:
                        close_gt = body.find(">", close)
                        i = n if close_gt < 0 else close_gt + 1
            else:
                tm = _TAG_RE.match(body, i)
                if tm is None:
                    emit("<")
                    i += 1
                else:
                    tag = tm.group(1).lower()
                    i = tm.end()
                    if tag in _SKIP_TAGS and not tm.group(2) and not tm.group().startswith("</"):
                        close = re.compile(rf"</{tag}\b[^<>]*>", re.IGNORECASE).search(body, i)
                        i = close.end() if close else n

        elif tok == "''":
            j = i
            while j < n and body[j] == "'":
                j += 1
            i = j

        elif tok == "\r":
            i += 1

        else:  # bare URL in running text: keep as text, count as a reference
            um = _BARE_URL_RE.match(body, i)
            raw_refs.append((_strip_url(um.group()), None))
            emit(um.group())
            i = um.end()

    return _CleanSection("", "".join(out), tuple(markers), tuple(raw_refs))


def _split_sections(wikitext: str) -> list[tuple[str, str]]:
    """(title, body) pairs in document order; the lead section has title ''."""
    sections = []
    last_title = ""
    last_end = 0
    for m in _HEADING_RE.finditer(wikitext):
        sections.append((last_title, wikitext[last_end : m.start()]))
        last_title = m.group(2).strip()
        last_end = m.end()
    sections.append((last_title, wikitext[last_end:]))
    return sections


def _blocks(text: str) -> list[tuple[int, int]]:
    """Paragraph spans: blank lines separate blocks, list items stand alone."""
    spans: list[tuple[int, int]] = []
    pos = 0
    current: Optional[list[int]] = None
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        is_item = stripped.startswith(("*", "#", ":", ";"))
        if not stripped:
            current = None
        elif current is None or is_item:
            current = [pos, pos + len(line)]
            spans.append((pos, pos + len(line)))
        else:
            spans[-1] = (spans[-1][0], pos + len(line))
        pos += len(line)
    return spans


def _split_sentences(
    block_text: str, abbreviations: frozenset[str]
) -> list[tuple[int, int]]:
    """Sentence spans within ``block_text`` (offsets relative to the block)."""
    spans = []
    start = 0
    for m in _BOUNDARY_RE.finditer(block_text):
        rest = block_text[m.end() :].lstrip("\"'“‘([")
        if not rest or not rest[0].isupper():
            continue
        if m.group().startswith("."):
            wm = _WORD_BEFORE_RE.search(block_text, 0, m.start() + 1)
            if wm:
                word = wm.group(1).lower().rstrip(".")
                if word in abbreviations or len(word) == 1:
                    continue
        spans.append((start, m.end()))
        start = m.end()
    if start < len(block_text):
        spans.append((start, len(block_text)))
    return spans


def parse_article(
    wikitext: str,
    excluded_sections: Iterable[str] | None = None,
    abbreviations: Iterable[str] | None = None,
    known_domains: Iterable[str] = (),
) -> ParsedArticle:
    """Full parse: cleaned sentences with citation flags plus referenced domains.

    Sentences under excluded sections are discarded but their URLs still count
    as references (with no sentence attachment).  URLs that cannot be reduced
    to a domain are dropped and tallied in ``skipped_urls``.
    """
    if isinstance(wikitext, bytes):
        wikitext = wikitext.decode("utf-8", errors="replace")
    excluded = (
        frozenset(t.lower() for t in excluded_sections)
        if excluded_sections is not None
        else default_excluded_sections()
    )
    abbrevs = (
        frozenset(a.lower() for a in abbreviations)
        if abbreviations is not None
        else default_abbreviations()
    )
    known = tuple(known_domains)

    sentences: list[Sentence] = []
    references: list[ExtractedReference] = []
    titles: list[str] = []
    skipped = 0

    for sec_idx, (title, body) in enumerate(_split_sections(wikitext)):
        titles.append(title)
        cleaned = _clean(body)
        keep = title.lower() not in excluded

        sent_starts: list[int] = []  # absolute offset in cleaned text
        sent_block: list[int] = []  # block ordinal per sentence
        block_starts: list[int] = []
        sec_sentences: list[tuple[int, str, str]] = []  # (start, text, paragraph)

        if keep:
            for b_ord, (bs, be) in enumerate(_blocks(cleaned.text)):
                block_starts.append(bs)
                block_text = cleaned.text[bs:be]
                paragraph = _LIST_PREFIX_RE.sub("", block_text.strip())
                for s, e in _split_sentences(block_text, abbrevs):
                    text = _LIST_PREFIX_RE.sub("", block_text[s:e].strip())
                    if not text:
                        continue
                    sent_starts.append(bs + s)
                    sent_block.append(b_ord)
                    sec_sentences.append((bs + s, text, paragraph))

        def _attach(offset: int) -> Optional[int]:
            """Sentence ordinal owning a marker at ``offset``, if any."""
            if not sent_starts:
                return None
            b = bisect_right(block_starts, offset) - 1
            lo = bisect_left(sent_block, b)
            hi = bisect_right(sent_block, b)
            if lo == hi:  # the marker's block produced no sentences
                return None
            idx = bisect_left(sent_starts, offset, lo, hi)
            return max(idx - 1, lo) if idx > lo else lo

        flagged = [0] * len(sec_sentences)
        for offset in cleaned.markers:
            owner = _attach(offset)
            if owner is not None:
                flagged[owner] = 1

        for ord_, ((_, text, paragraph), c) in enumerate(zip(sec_sentences, flagged)):
            sentences.append(Sentence(text, title, paragraph, c, (sec_idx, ord_)))

        for url, offset in cleaned.raw_refs:
            domain = normalize_domain(url, known)
            if domain is None:
                skipped += 1
                continue
            pos = None
            if offset is not None:
                owner = _attach(offset)
                if owner is not None:
                    pos = (sec_idx, owner)
            references.append(ExtractedReference(url, domain, pos))

    return ParsedArticle(tuple(sentences), tuple(references), tuple(titles), skipped)


def segment(
    wikitext: str,
    excluded_sections: Iterable[str] | None = None,
    abbreviations: Iterable[str] | None = None,
) -> list[Sentence]:
    """Split wikitext into sentences with per-sentence citation flags."""
    return list(parse_article(wikitext, excluded_sections, abbreviations).sentences)


def extract_domains(
    wikitext: str, known_domains: Iterable[str] = ()
) -> list[ExtractedReference]:
    """Referenced URLs in document order, normalized to registrable domains.

    Duplicates are retained: reference risk counts citation instances.  Pass
    the reliability list's domains as ``known_domains`` so deep entries are
    preserved by longest-suffix matching.
    """
    return list(parse_article(wikitext, known_domains=known_domains).references)


def attach_citations(
    sentences: Sequence[Sentence], refs: Sequence[ExtractedReference]
) -> list[Sentence]:
    """Set each sentence's citation flag from reference attachment positions.

    The flag is binary: any number of attached references yields c=1.  Only
    references produced from the same wikitext carry meaningful positions.
    Note ``segment`` already flags URL-less ``<ref>`` markers, which carry no
    :class:`ExtractedReference`.
    """
    positions = {r.sentence_position for r in refs if r.sentence_position is not None}
    return [replace(s, has_citation=1 if s.position in positions else 0) for s in sentences]
