"""Brute-force reference metrics, written independently of iduqa.evaluation."""

from fractions import Fraction

PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
SPACE = set(" \t\n\r\x0b\x0c")


def ref_trim(s):
    i, j = 0, len(s)
    while i < j and s[i] in SPACE:
        i += 1
    while j > i and s[j - 1] in SPACE:
        j -= 1
    return s[i:j]


def ref_words(s):
    words, cur = [], ""
    for ch in s:
        if ch in SPACE:
            if cur:
                words.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        words.append(cur)
    out = []
    for w in words:
        w = w.lower()
        while w and w[0] in PUNCT:
            w = w[1:]
        while w and w[-1] in PUNCT:
            w = w[:-1]
        if w:
            out.append(w)
    return out


def ref_em(pred, gold):
    return 1 if ref_trim(pred) == ref_trim(gold) else 0


def ref_pr(pred, gold):
    p, g = ref_trim(pred), ref_trim(gold)
    if g == "":
        return 1 if p == "" else 0
    for i in range(len(p) - len(g) + 1):
        if p[i : i + len(g)] == g:
            return 1
    return 0


def ref_f1(pred, gold):
    p, g = ref_words(pred), ref_words(gold)
    if not p and not g:
        return 1.0
    remaining = list(g)
    tp = 0
    for tok in p:
        if tok in remaining:
            remaining.remove(tok)
            tp += 1
    if tp == 0:
        return 0.0
    precision = Fraction(tp, len(p))
    recall = Fraction(tp, len(g))
    return float(2 * precision * recall / (precision + recall))
