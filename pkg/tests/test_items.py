import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import allocation_oracle
from rubric_audit.items import (
    AssessmentItem,
    GradeLabel,
    ItemParseError,
    ItemValidationError,
    StudentResponse,
    balanced_allocation,
    dump_items,
    item_to_dict,
    load_items,
    parse_items,
    sample_balanced,
    select_graded_examples,
)


def make_item(pools, names=("Beginning", "Developing", "Proficient"), item_id="it"):
    labels = tuple(GradeLabel(nm, i) for i, nm in enumerate(names[: len(pools)]))
    responses = tuple(
        StudentResponse(f"{lab.name}-{k}", f"answer {lab.name} {k}", lab)
        for lab, size in zip(labels, pools)
        for k in range(size)
    )
    return AssessmentItem(
        id=item_id,
        task_description="task",
        holistic_rubric=tuple((lab.name, f"{lab.name} descriptor") for lab in labels),
        analytic_rubric=("rule one", "rule two"),
        labels=labels,
        responses=responses,
    )


def _doc(**overrides):
    item = {
        "id": "x",
        "task": "t",
        "levels": ["Beginning", "Developing", "Proficient"],
        "holistic": {"Beginning": "b", "Developing": "d", "Proficient": "p"},
        "analytic": ["r1"],
        "responses": [{"id": "r", "text": "hello", "label": "Developing"}],
    }
    item.update(overrides)
    return {"items": [item]}


class TestLoad:
    def test_worked_item(self, worked_item):
        assert len(worked_item.analytic_rubric) == 4
        assert [lab.name for lab in worked_item.labels] == ["Beginning", "Developing", "Proficient"]
        assert worked_item.analytic_rubric[1] == "The key identifies water and dye particles."

    def test_empty_document(self, tmp_path):
        path = tmp_path / "items.json"
        path.write_text('{"items": []}')
        assert load_items(path) == []

    def test_missing_holistic_descriptor(self):
        doc = _doc(holistic={"Beginning": "b", "Proficient": "p"})
        with pytest.raises(ItemValidationError, match="Developing"):
            parse_items(doc)

    def test_duplicate_item_ids(self):
        doc = _doc()
        doc["items"].append(dict(doc["items"][0]))
        with pytest.raises(ItemValidationError, match="duplicate item id"):
            parse_items(doc)

    def test_malformed_field_names_item(self):
        doc = _doc(levels="Beginning")
        with pytest.raises(ItemParseError, match=r"item 'x'.*levels"):
            parse_items(doc)

    def test_missing_field(self):
        doc = _doc()
        del doc["items"][0]["task"]
        with pytest.raises(ItemParseError, match="task"):
            parse_items(doc)

    def test_unknown_response_label(self):
        doc = _doc(responses=[{"id": "r", "text": "hi", "label": "Expert"}])
        with pytest.raises(ItemValidationError, match="Expert"):
            parse_items(doc)

    def test_blank_response_text(self):
        doc = _doc(responses=[{"id": "r", "text": "   ", "label": "Beginning"}])
        with pytest.raises(ItemValidationError):
            parse_items(doc)

    @pytest.mark.parametrize("levels", [["A"], ["A", "B", "C", "D"]])
    def test_level_count(self, levels):
        doc = _doc(levels=levels, holistic={k: "x" for k in levels}, responses=[])
        with pytest.raises(ItemValidationError, match="2 or 3"):
            parse_items(doc)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{items: ")
        with pytest.raises(ItemParseError):
            load_items(path)

    def test_round_trip(self, fixture_items, tmp_path):
        path = tmp_path / "copy.json"
        dump_items(fixture_items, path)
        assert load_items(path) == fixture_items
        original = json.loads((tmp_path / "copy.json").read_text())
        assert original["items"][0] == item_to_dict(fixture_items[0])


class TestBalancedSampling:
    def test_allocation_34_33_33(self):
        assert balanced_allocation(100, [200, 200, 200]) == [34, 33, 33]
        sample = sample_balanced(make_item([50, 50, 50]), 100, seed=1)
        counts = Counter(r.gold_label.ordinal for r in sample.responses)
        assert [counts[i] for i in range(3)] == [34, 33, 33]

    def test_short_label_backfill(self):
        # Wanted (2, 1, 1); ordinal 0 holds only 1, so one slot is backfilled to ordinal 1.
        assert allocation_oracle(4, [1, 10, 10]) == [1, 2, 1]
        assert balanced_allocation(4, [1, 10, 10]) == [1, 2, 1]

    def test_whole_pool(self):
        item = make_item([34, 33, 33])
        sample = sample_balanced(item, 100, seed=3)
        assert sorted(sample.ids()) == sorted(r.id for r in item.responses)

    def test_pool_smaller_than_n(self):
        sample = sample_balanced(make_item([3, 2, 1]), 100, seed=0)
        assert len(sample) == 6

    def test_zero_n(self):
        with pytest.raises(ValueError):
            sample_balanced(make_item([2, 2, 2]), 0, seed=0)

    def test_deterministic(self):
        item = make_item([20, 15, 9])
        assert sample_balanced(item, 30, 7) == sample_balanced(item, 30, 7)
        assert sample_balanced(item, 30, 7).ids() != sample_balanced(item, 30, 8).ids()

    @given(
        st.lists(st.integers(0, 12), min_size=2, max_size=3).filter(lambda p: sum(p) > 0),
        st.integers(1, 40),
        st.integers(0, 2**63),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, pools, n, seed):
        item = make_item(pools)
        sample = sample_balanced(item, n, seed)
        counts = Counter(r.gold_label.ordinal for r in sample.responses)
        assert [counts[i] for i in range(len(pools))] == allocation_oracle(n, pools)
        assert len(set(sample.ids())) == len(sample)

    @given(st.integers(1, 60), st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_balanced_when_pools_ample(self, n, seed):
        need = -(-n // 3)
        sample = sample_balanced(make_item([need, need + 2, need + 5]), n, seed)
        counts = Counter(r.gold_label.ordinal for r in sample.responses)
        assert max(counts.values()) - min(counts[i] for i in range(3)) <= 1


class TestGradedExamples:
    def test_covers_every_label(self):
        item = make_item([10, 10, 10])
        for seed in range(100):
            picked = select_graded_examples(item, 5, seed)
            assert len(picked) == 5
            assert {r.gold_label.ordinal for r in picked} == {0, 1, 2}

    def test_small_pool(self):
        item = make_item([1, 1])
        assert sorted(r.id for r in select_graded_examples(item, 5, 0)) == sorted(
            r.id for r in item.responses
        )

    def test_binomial(self):
        item = make_item([6, 6], names=("Beginning", "Proficient"))
        for seed in range(50):
            picked = select_graded_examples(item, 5, seed)
            assert {r.gold_label.ordinal for r in picked} == {0, 1}

    def test_excludes_evaluation_sample(self):
        item = make_item([12, 12, 12])
        for seed in range(50):
            sample = sample_balanced(item, 30, seed)
            picked = select_graded_examples(item, 5, seed, exclude=sample.ids())
            assert not set(r.id for r in picked) & set(sample.ids())
            assert len(picked) == 5

    def test_empty_pool(self):
        item = make_item([2, 2])
        assert select_graded_examples(item, 5, 0, exclude=[r.id for r in item.responses]) == []

    def test_k_below_one(self):
        with pytest.raises(ValueError):
            select_graded_examples(make_item([2, 2]), 0, 0)

    def test_k_smaller_than_levels(self):
        picked = select_graded_examples(make_item([5, 5, 5]), 2, 0)
        assert [r.gold_label.ordinal for r in picked] == [0, 1]
