"""Slow, independent re-statements of the contracts, used as test oracles."""

from collections import defaultdict
from fractions import Fraction


def grams(text, n):
    if len(text) < n:
        return {text}
    out = set()
    for i in range(len(text) - n + 1):
        out.add(text[i:i + n])
    return out


def norm(text):
    return " ".join(text.lower().split())


def tokens(title):
    spans, start = [], None
    for i, ch in enumerate(title + " "):
        word = ch.isalnum() and i < len(title)
        if word and start is None:
            start = i
        elif not word and start is not None:
            spans.append((start, i))
            start = None
    return spans


def brute_force_matches(entries, title, n=3, threshold=0.7, window=5):
    """Every token window against every entry; returns comparable tuples."""
    toks = tokens(title)
    out = []
    for i in range(len(toks)):
        for j in range(i, min(i + window, len(toks))):
            start, end = toks[i][0], toks[j][1]
            a = grams(norm(title[start:end]), n)
            for e in entries:
                b = grams(norm(e.term), n)
                sim = len(a & b) / len(a | b)
                if sim >= threshold:
                    out.append((start, end, e.cui, sim, e.term))
    out.sort(key=lambda t: (t[0], -t[1], t[2], -t[3], t[4]))
    return out


def naive_graph(pairs):
    """Statistics by nested loops over the (source, dest) list."""
    kept = [(s, d) for s, d in pairs if s != d]
    nodes = sorted({c for p in kept for c in p})
    stats = {}
    for c in nodes:
        src = sum(1 for s, _ in kept if s == c)
        dst = sum(1 for _, d in kept if d == c)
        outs = {d for s, d in kept if s == c}
        ins = {s for s, d in kept if d == c}
        cent = Fraction(len(outs), len(nodes) - 1) if len(nodes) > 1 else Fraction(0)
        stats[c] = (src, dst, len(outs), len(ins), cent)
    edges = defaultdict(int)
    for s in nodes:
        for d in nodes:
            n = sum(1 for p in kept if p == (s, d))
            if n:
                edges[s, d] = n
    weights = {k: Fraction(n, stats[k[0]][0]) for k, n in edges.items()}
    return stats, dict(edges), weights, len(pairs) - len(kept)
