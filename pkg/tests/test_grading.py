import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_completion, rating_oracle
from rubric_audit.gateway import FunctionBackend, MockBackend, ResponseCache, TransportError, ChatParams
from rubric_audit.grading import (
    GradingAborted,
    GradingOutcome,
    accuracy,
    confusion_matrix,
    extract_rating,
    find_bracketed,
    grade_item,
    read_outcomes,
    write_outcomes,
)
from rubric_audit.items import GradeLabel, SampledCorpus, sample_balanced
from rubric_audit.prompts import RubricVariant, render_grading_prompt

LABELS = [GradeLabel("Beginning", 0), GradeLabel("Developing", 1), GradeLabel("Proficient", 2)]
NAMES = [lab.name for lab in LABELS]


def gold_of(item):
    by_text = {r.text: r.gold_label.name for r in item.responses}

    def answer(transcript):
        text = transcript.messages[-1].content.split("__Student Response:__ ", 1)[1]
        return f"Looks right. Rating: [[{by_text[text]}]]"

    return answer


class TestExtract:
    def test_template_example(self):
        assert extract_rating("particles move faster. Rating: [[Beginning]]", LABELS) == (LABELS[0], "parsed")

    def test_missing(self):
        assert extract_rating("no brackets here", LABELS) == (None, "missing_rating")

    def test_last_wins_case_folded(self):
        assert extract_rating("[[Developing]] ... final answer [[proficient]]", LABELS) == (LABELS[2], "parsed")

    def test_unknown(self):
        assert extract_rating("Rating: [[Expert]]", LABELS) == (None, "unknown_label")

    def test_trimmed(self):
        assert extract_rating("[[  developing ]]", LABELS)[0] == LABELS[1]

    def test_nested_brackets(self):
        assert find_bracketed("[[[Beginning]]]") == ["Beginning"]
        assert find_bracketed("[[a[b]]") == []
        assert find_bracketed("[a[[b]]") == ["b"]

    def test_no_labels(self):
        with pytest.raises(ValueError):
            extract_rating("[[x]]", [])

    @given(st.text(alphabet="ab[] Beginnig", max_size=40))
    @settings(max_examples=300)
    def test_scanner_matches_regex(self, text):
        assert find_bracketed(text) == re.findall(r"\[\[([^\[\]]*)\]\]", text)

    def test_random_completions(self):
        rng = random.Random(11)
        for _ in range(2000):
            text = random_completion(rng, NAMES)
            label, status = extract_rating(text, LABELS)
            assert (label.name if label else None, status) == rating_oracle(text, NAMES)


def _outcome(correct, status="parsed", gold=LABELS[0]):
    return GradingOutcome("r", "", gold if status == "parsed" else None, status, correct, gold)


class TestAccuracy:
    def test_values(self):
        assert accuracy([_outcome(True)] * 3) == 1.0
        assert accuracy([_outcome(False)] * 3) == 0.0
        assert accuracy([_outcome(True)] * 7 + [_outcome(False)] * 5) == pytest.approx(0.5833333333)

    def test_empty(self):
        with pytest.raises(ValueError):
            accuracy([])

    def test_confusion_totals(self):
        outs = [_outcome(True), _outcome(False, "missing_rating", LABELS[2])]
        mat = confusion_matrix(outs, LABELS)
        assert mat.shape == (3, 4) and mat.sum() == 2 and mat[2, 3] == 1


class TestGradeItem:
    def test_oracle_backend(self, worked_item, tmp_path):
        sample = sample_balanced(worked_item, 30, 0)
        rep = grade_item(
            worked_item, RubricVariant.human_of(worked_item), sample,
            FunctionBackend(gold_of(worked_item)), ResponseCache(tmp_path / "c.jsonl"), ChatParams(),
        )
        assert rep.accuracy == 1.0
        assert [o.response_id for o in rep.outcomes] == sample.ids()
        assert rep.confusion.sum(axis=1).tolist() == [10, 10, 10]

    def test_no_brackets(self, worked_item):
        sample = sample_balanced(worked_item, 12, 0)
        rep = grade_item(
            worked_item, RubricVariant("none"), sample,
            FunctionBackend(lambda tr: "I think it is fine."), None, ChatParams(),
        )
        assert rep.accuracy == 0.0
        assert rep.status_counts() == {"parsed": 0, "missing_rating": 12, "unknown_label": 0}
        assert rep.confusion[:, -1].sum() == 12

    def test_six_of_ten_fixture(self, worked_item):
        sample = sample_balanced(worked_item, 10, 5)
        variant = RubricVariant.human_of(worked_item)
        # Hand-written replies: positions 0-5 give the gold label, 6 a wrong label, 7 no
        # brackets, 8 an unknown label, 9 a wrong label after a quoted gold one.
        mock = MockBackend()
        for pos, resp in enumerate(sample.responses):
            gold = resp.gold_label.name
            wrong = next(n for n in NAMES if n != gold)
            reply = [
                f"Rating: [[{gold}]]", f"Rating: [[{gold.lower()}]]", f"[[{gold}]]",
                f"Explanation first. Rating: [[ {gold} ]]", f"[[{wrong}]] no wait [[{gold}]]",
                f"Rating: [[{gold.upper()}]]", f"Rating: [[{wrong}]]", "Rating: none",
                "Rating: [[Excellent]]", f"Not [[{gold}]] but [[{wrong}]]",
            ][pos]
            mock.record(render_grading_prompt(worked_item, variant, resp), reply)
        rep = grade_item(worked_item, variant, sample, mock, None, ChatParams())
        assert rep.accuracy == pytest.approx(0.6)
        assert int(rep.confusion.sum()) == 10
        assert rep.status_counts() == {"parsed": 8, "missing_rating": 1, "unknown_label": 1}

    @pytest.mark.parametrize("workers", [1, 4])
    def test_deterministic(self, worked_item, workers):
        sample = sample_balanced(worked_item, 30, 2)
        run = lambda: grade_item(
            worked_item, RubricVariant.human_of(worked_item), sample,
            FunctionBackend(gold_of(worked_item)), None, ChatParams(), workers=workers,
        ).summary()
        assert run() == run()

    @pytest.mark.parametrize("workers", [1, 3])
    def test_partial_abort(self, worked_item, tmp_path, workers):
        sample = sample_balanced(worked_item, 9, 0)
        bad = sample.responses[4].text
        answer = gold_of(worked_item)

        def flaky(tr):
            if bad in tr.messages[-1].content:
                raise TransportError("down")
            return answer(tr)

        partial = tmp_path / "partial.jsonl"
        backend = FunctionBackend(flaky)
        with pytest.raises(GradingAborted) as info:
            grade_item(
                worked_item, RubricVariant.human_of(worked_item), sample, backend,
                ResponseCache(tmp_path / "c.jsonl"), ChatParams(), workers=workers,
                partial_path=partial,
            )
        assert len(info.value.partial) == 4
        assert [o.response_id for o in read_outcomes(partial, worked_item.labels)] == sample.ids()[:4]

    def test_example_in_sample_rejected(self, worked_item):
        sample = sample_balanced(worked_item, 9, 0)
        ex = sample.responses[0]
        with pytest.raises(ValueError):
            grade_item(
                worked_item, RubricVariant.human_of(worked_item), sample,
                FunctionBackend(gold_of(worked_item)), None, ChatParams(), example=(ex, ex.gold_label),
            )

    def test_empty_sample(self, worked_item):
        with pytest.raises(ValueError):
            grade_item(
                worked_item, RubricVariant("none"), SampledCorpus(worked_item.id, (), 0),
                FunctionBackend(lambda tr: "x"), None, ChatParams(),
            )

    def test_outcomes_round_trip(self, worked_item, tmp_path):
        sample = sample_balanced(worked_item, 6, 0)
        rep = grade_item(
            worked_item, RubricVariant.human_of(worked_item), sample,
            FunctionBackend(gold_of(worked_item)), None, ChatParams(),
        )
        write_outcomes(tmp_path / "o.jsonl", rep.outcomes)
        assert tuple(read_outcomes(tmp_path / "o.jsonl", worked_item.labels)) == rep.outcomes
