"""Registrable-domain normalization against a bundled public-suffix snapshot.

Hosts are reduced to their registrable domain (one label below the public
suffix), except that callers may supply a set of known domains that take
precedence via longest-suffix matching.  That keeps deep listed entries such
as ``baike.baidu.com`` intact instead of collapsing them to ``baidu.com``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional
from urllib.parse import urlsplit

_DOMAIN_RE = re.compile(r"^[a-z0-9.-]+$")
_IPV4_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")


class PublicSuffixList:
    """Suffix rules with exact, wildcard (``*.``) and exception (``!``) entries."""

    def __init__(self, rules: Iterable[str]):
        self._exact: set[str] = set()
        self._wildcard: set[str] = set()
        self._exception: set[str] = set()
        for rule in rules:
            rule = rule.strip().lower()
            if not rule or rule.startswith("//") or rule.startswith("#"):
                continue
            if rule.startswith("!"):
                self._exception.add(rule[1:])
            elif rule.startswith("*."):
                self._wildcard.add(rule[2:])
            else:
                self._exact.add(rule)

    def public_suffix(self, host: str) -> str:
        """Longest matching suffix rule for ``host``; unknown TLDs match ``*``."""
        labels = host.split(".")
        best = labels[-1]
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self._exception:
                # Exception rules make the candidate registrable, so the
                # public suffix is one label shorter.
                return ".".join(labels[i + 1:])
            if candidate in self._exact and len(candidate) > len(best):
                best = candidate
            if i > 0 and ".".join(labels[i:]) in self._wildcard:
                wide = ".".join(labels[i - 1:])
                if len(wide) > len(best):
                    best = wide
        return best

    def registrable_domain(self, host: str) -> str:
        """Public suffix plus one label; ``host`` itself if nothing remains."""
        suffix = self.public_suffix(host)
        if host == suffix:
            return host
        prefix = host[: -(len(suffix) + 1)]
        return prefix.split(".")[-1] + "." + suffix


@lru_cache(maxsize=1)
def default_suffix_list() -> PublicSuffixList:
    text = resources.files("refquality.data").joinpath("public_suffixes.txt").read_text("utf-8")
    return PublicSuffixList(text.splitlines())


def _host_of(url_or_host: str) -> Optional[str]:
    s = url_or_host.strip()
    if "://" in s or s.startswith("//"):
        host = urlsplit(s if "://" in s else "http:" + s).hostname
    else:
        # Bare host, possibly with a path or port attached.
        s = s.split("/", 1)[0].split("?", 1)[0].split("#", 1)[0]
        if "@" in s:
            s = s.rsplit("@", 1)[1]
        host = s.rsplit(":", 1)[0] if re.search(r":\d+$", s) else s
    if not host:
        return None
    return host.lower().rstrip(".")


def longest_suffix_match(domain: str, candidates: Iterable[str]) -> Optional[str]:
    """Longest candidate that equals ``domain`` or is a dot-boundary suffix of it."""
    best = None
    for cand in candidates:
        if domain == cand or domain.endswith("." + cand):
            if best is None or len(cand) > len(best):
                best = cand
    return best


def normalize_domain(
    url_or_host: str,
    known_domains: Iterable[str] = (),
    psl: PublicSuffixList | None = None,
) -> Optional[str]:
    """Normalize a URL or host to its registrable domain.

    Lower-cases, strips scheme/path/port and a leading ``www.``, then matches
    ``known_domains`` by longest suffix before falling back to public-suffix
    reduction.  Returns ``None`` for hosts that cannot be normalized (the
    caller decides how to count those).
    """
    host = _host_of(url_or_host)
    if host is None:
        return None
    if host.startswith("www.") and host.count(".") > 1:
        host = host[4:]
    if not _DOMAIN_RE.match(host) or host.startswith(".") or host.endswith(".") or ".." in host:
        return None
    if _IPV4_RE.match(host):
        return host
    if "." not in host:
        return None
    matched = longest_suffix_match(host, known_domains)
    if matched is not None:
        return matched
    return (psl or default_suffix_list()).registrable_domain(host)
