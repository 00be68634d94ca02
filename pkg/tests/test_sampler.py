"""Task sampling: candidate enumeration, selection invariants, rejection."""

import pytest

from morphoprobe.conllu import parse_conllu
from morphoprobe.conllu import Corpus
from morphoprobe.errors import DataError
from morphoprobe.sampler import (Rejection, SamplerConfig, TaskSpec,
                                 enumerate_candidates, iter_occurrences,
                                 load_task, sample_task, save_task,
                                 validate_dataset)

DESK = SamplerConfig(n_train=100, n_dev=20, n_test=20, min_class_count=20,
                     min_sentences=100, seed=42)


def test_enumerate_candidates_fixture_counts(gen_corpus):
    summary = {c.spec.task_id: c.value_counts
               for c in enumerate_candidates(gen_corpus)}
    assert summary["fx_NOUN_Number"] == {"Plur": 630, "Sing": 788}
    assert summary["fx_VERB_Tense"] == {"Past": 573, "Pres": 542}
    assert summary["fx_ADJ_Gender"] == {"Fem": 261, "Masc": 258, "Neut": 6}
    assert summary["fx_PROPN_Case"] == {"Acc": 104, "Nom": 111}


def test_sample_noun_number_valid(gen_corpus):
    out = sample_task(gen_corpus, TaskSpec("fx", "NOUN", "Number"), DESK)
    assert not isinstance(out, Rejection)
    assert out.labels == ("Plur", "Sing")
    assert validate_dataset(out, DESK) == []


def test_sample_deterministic(gen_corpus):
    spec = TaskSpec("fx", "VERB", "Tense")
    a = sample_task(gen_corpus, spec, DESK)
    b = sample_task(gen_corpus, spec, DESK)
    assert a == b
    c = sample_task(gen_corpus, spec,
                    SamplerConfig(**{**DESK.__dict__, "seed": 43}))
    assert c != a  # different seed reshuffles the selection


def test_sample_rejects_scarce_task(gen_corpus):
    # PROPN Case has ~215 occurrences total; the train quota of 100 cannot
    # be met once dev/test have claimed their disjoint forms.
    out = sample_task(gen_corpus, TaskSpec("fx", "PROPN", "Case"), DESK)
    assert isinstance(out, Rejection)
    assert out.reason == "counts_unattainable"


def test_sample_rejects_small_corpus(gen_corpus):
    cfg = SamplerConfig(n_train=100, n_dev=20, n_test=20, min_class_count=20,
                        min_sentences=10**6)
    out = sample_task(gen_corpus, TaskSpec("fx", "NOUN", "Number"), cfg)
    assert isinstance(out, Rejection)
    assert out.reason == "insufficient_sentences"


def test_sample_rejects_single_class(gen_corpus):
    # Fem/Masc/Neut counts are 261/258/6; a bar at 260 leaves only Fem.
    cfg = SamplerConfig(n_train=100, n_dev=20, n_test=20, min_class_count=260,
                        min_sentences=100)
    out = sample_task(gen_corpus, TaskSpec("fx", "ADJ", "Gender"), cfg)
    assert isinstance(out, Rejection)
    assert out.reason == "too_few_classes"


def test_length_filter_respected(gen_corpus):
    cfg = SamplerConfig(n_train=40, n_dev=10, n_test=10, min_class_count=10,
                        min_sentences=100, min_len=5, max_len=9, seed=1)
    out = sample_task(gen_corpus, TaskSpec("fx", "NOUN", "Number"), cfg)
    assert not isinstance(out, Rejection)
    for split, instances in out.splits.items():
        assert all(5 <= len(i.words) <= 9 for i in instances), split


def test_save_load_roundtrip(gen_corpus, tmp_path):
    out = sample_task(gen_corpus, TaskSpec("fx", "NOUN", "Number"), DESK)
    save_task(out, tmp_path / "task", DESK)
    loaded, cfg = load_task(tmp_path / "task")
    assert loaded == out
    assert cfg == DESK


def test_load_task_missing(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        load_task(tmp_path / "nowhere")


def _sent(text, split="train"):
    return parse_conllu(text, "fx", "tb", split)


def test_propn_runs_collapse():
    text = ("1\tNew\tNew\tPROPN\t_\tCase=Nom\t0\troot\t_\t_\n"
            "2\tYork\tYork\tPROPN\t_\tCase=Nom\t1\tflat\t_\t_\n"
            "3\tcalls\tcall\tVERB\t_\tTense=Pres\t1\t_\t_\t_\n"
            "4\tMary\tMary\tPROPN\t_\tCase=Acc\t3\tobj\t_\t_\n")
    sent = _sent(text)[0]
    occs = iter_occurrences(sent, "PROPN", "Case")
    assert [(o.positions, o.label) for o in occs] == [((0, 1), "Nom"),
                                                      ((3,), "Acc")]


def test_propn_disagreeing_run_skipped():
    text = ("1\tNew\tNew\tPROPN\t_\tCase=Nom\t0\troot\t_\t_\n"
            "2\tYork\tYork\tPROPN\t_\tCase=Acc\t1\tflat\t_\t_\n")
    sent = _sent(text)[0]
    assert iter_occurrences(sent, "PROPN", "Case") == []


def test_non_propn_occurrences_are_single_tokens():
    text = ("1\tkatu\tkatu\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_\n"
            "2\ttalot\ttalo\tNOUN\t_\tNumber=Plur\t1\t_\t_\t_\n"
            "3\tbare\tbare\tNOUN\t_\t_\t1\t_\t_\t_\n")
    sent = _sent(text)[0]
    occs = iter_occurrences(sent, "NOUN", "Number")
    assert [(o.positions, o.label) for o in occs] == [((0,), "Sing"),
                                                      ((1,), "Plur")]


def test_imbalance_cap_enforced():
    # 40 Sing vs 8 Plur available in train: water-filling tops out at
    # alloc {Plur: 8, Sing: 28} for quota 36, breaching the 3:1 cap.
    rows = []
    for i in range(60):
        label = "Plur" if i % 6 == 0 else "Sing"
        split = ("test" if i >= 56 else "dev" if i >= 52 else "train")
        rows.append(_sent(
            f"1\tw{i}a\tw\tNOUN\t_\tNumber={label}\t0\troot\t_\t_\n"
            f"2\tx{i}\tx\tVERB\t_\t_\t1\t_\t_\t_\n"
            f"3\ty{i}\ty\tADJ\t_\t_\t1\t_\t_\t_\n", split)[0])
    corpus = Corpus(language="fx", sentences=rows)
    cfg = SamplerConfig(n_train=36, n_dev=2, n_test=2, min_class_count=5,
                        min_sentences=10)
    out = sample_task(corpus, TaskSpec("fx", "NOUN", "Number"), cfg)
    assert isinstance(out, Rejection)
    assert out.reason == "counts_unattainable"
    assert "imbalance" in out.detail


def test_validate_dataset_flags_planted_violations(gen_corpus):
    out = sample_task(gen_corpus, TaskSpec("fx", "NOUN", "Number"), DESK)
    # Duplicate a test target form into train: disjointness violation.
    broken = type(out)(spec=out.spec, train=out.train + [out.test[0]],
                       dev=out.dev, test=out.test, labels=out.labels)
    messages = validate_dataset(broken, DESK)
    assert any("expected" in m for m in messages)       # size off by one
    assert any("shared between" in m for m in messages)


def test_scaled_config():
    cfg = SamplerConfig()  # full-scale defaults
    small = cfg.scaled(0.05)
    assert (small.n_train, small.n_dev, small.n_test) == (100, 10, 10)
    assert small.min_class_count == 10
    assert small.max_imbalance == cfg.max_imbalance
    assert small.min_len == cfg.min_len and small.max_len == cfg.max_len
    with pytest.raises(DataError):
        cfg.scaled(0)


def test_config_validation():
    with pytest.raises(DataError):
        SamplerConfig(n_train=0)
    with pytest.raises(DataError):
        SamplerConfig(max_imbalance=0.5)
    with pytest.raises(DataError):
        SamplerConfig(min_len=0)
    with pytest.raises(DataError):
        SamplerConfig(min_len=10, max_len=5)
