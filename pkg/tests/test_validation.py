import numpy as np
import pytest

from gencs.errors import InputError
from gencs.families import make_family
from gencs.oracle import DenseSystem
from gencs.standard_form import GenState, expectation
from gencs.operators import OperatorExpr
from gencs.validation import all_words, deviation, pipeline_words, sorted_words, validate


def test_word_sets():
    assert len(all_words(3, 2)) == 1 + 3 + 9
    assert sorted_words(4, 2)[-1] == (2, 3)
    assert len(sorted_words(4, 4)) == 16


def test_pipeline_words_match_expectation(rng):
    fam = make_family("spin", 2)
    st = GenState.random(fam, rng)
    words = [(), (2,), (0, 4), (1, 3, 5)]
    vals = pipeline_words(st, words)
    names = ["sx[0]", "sy[0]", "sz[0]", "sx[1]", "sy[1]", "sz[1]"]
    for w, v in zip(words, vals):
        obs = OperatorExpr.from_tokens(fam, [(1.0, [names[i] for i in w])])
        assert abs(v - expectation(st, obs)) < 1e-12


def test_deviation_modes():
    assert deviation([1.0], [3.0], relative=False) == 2.0
    assert deviation([1.0], [4.0], relative=True) == 0.75
    assert deviation([0.5], [0.0], relative=True) == 0.5


@pytest.mark.parametrize("kind,n,kw,tol", [
    ("spin", 2, {}, 1e-10),
    ("fermion", 2, {"words": "sorted", "max_degree": 4}, 1e-10),
    ("boson", 1, {"k_norm": 0.3}, 1e-6),
])
def test_small_sweeps(kind, n, kw, tol):
    report = validate(kind, n, fixtures=2, **kw)
    assert report["max_deviation"] < tol
    assert len(report["per_fixture"]) == 2


def test_unknown_word_set():
    with pytest.raises(InputError):
        validate("spin", 1, words="odd")
