"""Deterministic text normalization shared by indexing, querying, and
answer classification."""

import re
from pathlib import Path

from .errors import ConfigError

# Apostrophes vanish before splitting so "don't" becomes "dont".
_APOSTROPHES = re.compile("['’]")
# Alphanumeric runs; [^\W_] is \w minus the underscore.
_TOKEN = re.compile(r"[^\W_]+")

DEFAULT_STOPLIST_PATH = Path(__file__).parent / "data" / "stoplist_en.txt"


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it on runs of non-alphanumeric characters.

    Digits are kept as tokens; empty input yields an empty list.
    """
    return _TOKEN.findall(_APOSTROPHES.sub("", text.lower()))


def remove_stopwords(tokens: list[str], stoplist: frozenset[str] | set[str]) -> list[str]:
    """Order-preserving filter dropping every token found in `stoplist`."""
    return [t for t in tokens if t not in stoplist]


def load_stoplist(path: str | Path | None = None) -> frozenset[str]:
    """Read a stoplist file: one lowercase token per line, '#' lines ignored.

    With no path, loads the bundled English list.
    """
    stoplist_path = Path(path) if path is not None else DEFAULT_STOPLIST_PATH
    if not stoplist_path.is_file():
        raise ConfigError(f"stoplist file not found: {stoplist_path}")
    words = set()
    for line in stoplist_path.read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)
