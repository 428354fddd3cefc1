from __future__ import annotations

import pytest

from softhand_sim.objects import (
    BUILTINS,
    DEFAULT_CORPUS,
    CorpusError,
    builtin,
    default_corpus,
    dump_corpus,
    load_corpus,
    resolve_object,
)


def test_default_corpus_has_fourteen_named_objects():
    corpus = default_corpus()
    assert [o.name for o in corpus] == list(DEFAULT_CORPUS)
    assert len(corpus) == 14
    assert all(o.mass and o.mass > 0 for o in corpus)


def test_corpus_yaml_round_trip(tmp_path):
    corpus = default_corpus()
    path = tmp_path / "corpus.yaml"
    path.write_text(dump_corpus(corpus))
    assert load_corpus(path) == corpus


@pytest.mark.parametrize("text, match", [
    ("objects: [", "malformed"),
    ("things: []", "top-level"),
    ("objects: []", "empty"),
    ("objects:\n  - name: x\n", "primitives"),
    ("objects:\n  - name: x\n    primitives: [{type: cone}]\n", r"objects\[0\]"),
])
def test_bad_corpus_files(tmp_path, text, match):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(CorpusError, match=match):
        load_corpus(path)


def test_resolve_object(tmp_path):
    assert resolve_object("none") is None
    assert resolve_object("card3mm").name == "card3mm"
    single = tmp_path / "one.yaml"
    single.write_text(dump_corpus([builtin("tape")]))
    assert resolve_object(str(single)) == builtin("tape")
    with pytest.raises(CorpusError, match="builtins"):
        resolve_object("teapot")


def test_every_builtin_builds():
    for name in BUILTINS:
        obj = builtin(name)
        assert obj.name == name and obj.primitives
