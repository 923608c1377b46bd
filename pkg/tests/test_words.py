import itertools
from collections import Counter

import pytest

from oracles import all_multiwords, stars_and_bars_size
from polyball.words import (MultiWord, ResourceCapError, TruncatedBasis, Word, basis_size, concat_left,
                            grade_count)


@pytest.mark.parametrize("n,N,size", [((2,), 2, 7), ((1, 1), 3, 10), ((1, 1, 1), 2, 10)])
def test_basis_sizes(n, N, size):
    assert TruncatedBasis(n, N).size == size
    assert basis_size(n, N) == size


@pytest.mark.parametrize("n,N", [((2,), 4), ((1, 2), 3), ((2, 1, 3), 2), ((3, 3), 2)])
def test_basis_matches_enumeration(n, N):
    b = TruncatedBasis(n, N)
    assert sorted(b) == sorted(all_multiwords(n, N))
    assert b.size == stars_and_bars_size(n, N)


def test_graded_order_and_vacuum():
    b = TruncatedBasis((2,), 2)
    assert b.letters_at(0) == ((),)
    assert b.grade(0) == 0
    assert b.grade(b.size - 1) == 2
    assert all(x <= y for x, y in zip(b.grades, b.grades[1:]))


def test_grade_histogram_matches_recount():
    n, N = (2, 1), 4
    b = TruncatedBasis(n, N)
    hist = Counter(int(g) for g in b.grades)
    recount = Counter(sum(len(w) for w in ws) for ws in all_multiwords(n, N))
    assert hist == recount
    assert all(hist[p] == grade_count(n, p) for p in range(N + 1))


def test_index_roundtrip():
    b = TruncatedBasis((2, 2), 3)
    for pos in range(b.size):
        assert b.index_of(b.word_at(pos)) == pos
        assert b.index_of(b.letters_at(pos)) == pos


def test_peel_reconstructs_words():
    b = TruncatedBasis((2, 1, 2), 3)
    parent, factor, letter = b.peel
    assert parent[0] == -1
    for pos in range(1, b.size):
        w = list(b.letters_at(parent[pos]))
        i = factor[pos]
        w[i] = (letter[pos] + 1,) + w[i]
        assert tuple(w) == b.letters_at(pos)
        assert all(len(c) == 0 for c in b.letters_at(pos)[:i])


def test_concat_left_examples():
    n = (2,)
    alpha = MultiWord.from_letters([(2, 1)], n)
    assert concat_left(MultiWord.empty(n), alpha) == alpha
    g1, g2 = MultiWord.from_letters([(1,)], n), MultiWord.from_letters([(2,)], n)
    assert concat_left(g1, g2).letters == ((1, 2),)


def test_concat_left_lengths_and_associativity():
    n = (2, 1)
    words = [MultiWord.from_letters(w, n) for w in all_multiwords(n, 2)]
    for g, a in itertools.product(words, repeat=2):
        assert concat_left(g, a).total_length == g.total_length + a.total_length
    for g, h, a in itertools.product(words[:8], repeat=3):
        assert concat_left(g, concat_left(h, a)) == concat_left(concat_left(g, h), a)


def test_errors():
    with pytest.raises(ValueError):
        TruncatedBasis((0,), 2)
    with pytest.raises(ValueError):
        Word((3,), 2)
    with pytest.raises(ResourceCapError):
        TruncatedBasis((3, 3), 8, size_cap=1000)
    with pytest.raises(ValueError):
        concat_left(MultiWord.empty((2,)), MultiWord.empty((3,)))
    with pytest.raises(IndexError):
        TruncatedBasis((1,), 2).grade(5)
