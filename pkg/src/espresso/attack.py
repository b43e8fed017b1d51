"""What a disclosed trigram space gives away.

A party that publishes the set of all trigrams in its corpus enables two
passive attacks: definitive absence tests for words, and reconstruction of
text fragments by walking overlapping trigrams as a directed graph.
"""

from __future__ import annotations

from dataclasses import dataclass

from .docsim import normalize, trigram_set

ABSENT = "absent"
POSSIBLY_PRESENT = "possibly-present"


@dataclass(frozen=True)
class TrigramGraph:
    vertices: frozenset[str]
    edges: dict[str, tuple[str, ...]]  # adjacency, successors sorted


def build_graph(space) -> TrigramGraph:
    """Edge x -> y whenever y continues x by one character."""
    space = set(space)
    for t in space:
        if len(t) != 3:
            raise ValueError(f"not a trigram: {t!r}")
    by_prefix: dict[str, list[str]] = {}
    for t in space:
        by_prefix.setdefault(t[:2], []).append(t)
    edges = {
        x: tuple(sorted(by_prefix.get(x[1:], ())))
        for x in space
    }
    return TrigramGraph(vertices=frozenset(space), edges=edges)


def word_in_space(space, word: str) -> str:
    """Definitive 'absent' or false-positive-prone 'possibly-present'."""
    norm = normalize(word)
    if len(norm) < 3:
        raise ValueError("word must normalize to at least 3 characters")
    grams = trigram_set(norm, 3).grams
    space = set(space)
    return POSSIBLY_PRESENT if grams <= space else ABSENT


def path_to_string(path) -> str:
    """First trigram in full, then the last character of each successor."""
    path = list(path)
    if not path:
        raise ValueError("path must be nonempty")
    return path[0] + "".join(t[2] for t in path[1:])


def extract_fragments(
    graph: TrigramGraph,
    max_len: int = 64,
    limit: int = 1000,
    dictionary=None,
) -> list[str]:
    """Depth-first enumeration of maximal simple paths, as strings.

    Cycles are handled by the simple-path restriction plus the max_len cap.
    An optional dictionary keeps only fragments containing a known word.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    max_path = max(max_len - 2, 1)
    fragments: list[str] = []

    def dfs(path: list[str], on_path: set[str]) -> bool:
        """Returns False once the fragment budget is exhausted."""
        extended = False
        if len(path) < max_path:
            for nxt in graph.edges[path[-1]]:
                if nxt in on_path:
                    continue
                extended = True
                path.append(nxt)
                on_path.add(nxt)
                keep_going = dfs(path, on_path)
                on_path.discard(nxt)
                path.pop()
                if not keep_going:
                    return False
        if not extended:
            fragments.append(path_to_string(path))
            if len(fragments) >= limit:
                return False
        return True

    for start in sorted(graph.vertices):
        if not dfs([start], {start}):
            break

    if dictionary is not None:
        words = {normalize(w) for w in dictionary}
        words.discard("")
        fragments = [f for f in fragments if any(w in f for w in words)]
    return fragments
