"""Weighted sampling, naming clients, and the uniqueness pass."""

import io
import json

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomonet.errors import NamingFailure
from nomonet.naming import (
    DimensionNaming,
    MockNamingClient,
    NameProposal,
    NamingRequest,
    RemoteNamingClient,
    ensure_unique,
    name_dimension,
    render_prompt,
    weighted_sample,
)


class TestWeightedSample:
    def test_full_list_ordered_by_loading(self):
        entries = [("low", 0.2), ("high", -0.9), ("mid", 0.5)]
        sample = weighted_sample(entries, max_n=10, seed=0)
        assert list(sample.items) == ["high", "mid", "low"]
        assert not sample.uniform_fallback

    def test_same_seed_same_sample(self):
        entries = [(f"i{n}", float(n)) for n in range(1, 30)]
        one = weighted_sample(entries, max_n=5, seed=9)
        two = weighted_sample(entries, max_n=5, seed=9)
        assert one.items == two.items

    def test_first_draw_probability_matches_weight_ratio(self):
        entries = [("heavy", 0.9), ("light", 0.1)]
        hits = sum(
            weighted_sample(entries, max_n=1, seed=seed).items == ("heavy",)
            for seed in range(4000)
        )
        assert hits / 4000 == pytest.approx(0.9, abs=0.02)

    def test_zero_weights_fall_back_to_uniform(self):
        entries = [("a", 0.0), ("b", 0.0), ("c", 0.0)]
        sample = weighted_sample(entries, max_n=2, seed=1)
        assert sample.uniform_fallback
        assert len(sample.items) == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weighted_sample([], max_n=1, seed=0)


SAMPLE = ("worry filled my mind", "anxious about everything", "nervous all day")
LABELS = ("anxiety", "anxiety", "worry")


class TestMockClient:
    def test_deterministic_modal_label_name(self):
        proposal = name_dimension(MockNamingClient(), SAMPLE, LABELS, dimension_index=2)
        assert proposal.name == "Anxiety"
        assert proposal.definition
        assert proposal.examples == SAMPLE[:3]

    def test_respects_alternates_when_avoiding(self):
        client = MockNamingClient(alternates={"Anxiety": ["Worry", "Dread"]})
        proposal = name_dimension(
            client, SAMPLE, LABELS, dimension_index=2, avoid_names=("Anxiety",)
        )
        assert proposal.name == "Worry"


class TestNameDimension:
    def test_examples_must_come_from_sample(self):
        class BadExamples:
            def complete(self, request):
                doc = {
                    "name": "X",
                    "definition": "y",
                    "examples": ["not in sample"] * request.n_examples,
                }
                return "```json\n" + json.dumps(doc) + "\n```"

        with pytest.raises(NamingFailure):
            name_dimension(BadExamples(), SAMPLE, LABELS)

    def test_empty_definition_retried_then_fails(self):
        calls = []

        class EmptyDefinition:
            def complete(self, request):
                calls.append(1)
                doc = {"name": "X", "definition": "", "examples": list(SAMPLE)}
                return "```json\n" + json.dumps(doc) + "\n```"

        with pytest.raises(NamingFailure, match="definition"):
            name_dimension(EmptyDefinition(), SAMPLE, LABELS, retries=3)
        assert len(calls) == 4  # initial attempt plus three retries

    def test_unparseable_response_fails(self):
        class Garbage:
            def complete(self, request):
                return "no json here"

        with pytest.raises(NamingFailure, match="fenced"):
            name_dimension(Garbage(), SAMPLE, LABELS)

    def test_recovers_on_second_attempt(self):
        responses = iter(
            [
                "garbage",
                "```json\n"
                + json.dumps(
                    {"name": "Worry", "definition": "d", "examples": list(SAMPLE)}
                )
                + "\n```",
            ]
        )

        class FlakyClient:
            def complete(self, request):
                return next(responses)

        proposal = name_dimension(FlakyClient(), SAMPLE, LABELS)
        assert proposal.name == "Worry"

    def test_transcript_records_attempts(self):
        transcript = io.StringIO()
        name_dimension(MockNamingClient(), SAMPLE, LABELS, transcript=transcript)
        entries = [json.loads(line) for line in transcript.getvalue().splitlines()]
        assert entries and entries[-1]["accepted"]

    def test_prompt_includes_items_and_avoid_names(self):
        prompt = render_prompt(3, [("text a", "label a")], ["Taken Name"], 1)
        assert "text a" in prompt and "label a" in prompt
        assert "Taken Name" in prompt


def _naming(index, name):
    return DimensionNaming(
        index=index,
        sample_texts=SAMPLE,
        sample_labels=LABELS,
        proposal=NameProposal(name=name, definition="d", examples=SAMPLE[:3]),
    )


class TestEnsureUnique:
    def test_no_duplicates_untouched(self):
        namings = [_naming(1, "Alpha"), _naming(2, "Beta")]
        finals = ensure_unique(namings, MockNamingClient())
        assert [p.name for p in finals] == ["Alpha", "Beta"]

    def test_stubborn_duplicate_gets_dim_suffix(self):
        # The mock keeps proposing "Anxiety", so the later dimension (index 9)
        # falls back to a suffix.
        namings = [_naming(1, "Anxiety"), _naming(9, "Anxiety")]
        finals = ensure_unique(namings, MockNamingClient())
        assert finals[0].name == "Anxiety"
        assert finals[1].name == "Anxiety (Dim 9)"

    def test_duplicate_resolved_on_retry_has_no_suffix(self):
        client = MockNamingClient(alternates={"Anxiety": ["Worry"]})
        namings = [_naming(1, "Anxiety"), _naming(2, "Anxiety")]
        finals = ensure_unique(namings, client)
        assert [p.name for p in finals] == ["Anxiety", "Worry"]

    def test_case_insensitive_duplicates_detected(self):
        namings = [_naming(1, "Anxiety"), _naming(2, "ANXIETY")]
        finals = ensure_unique(namings, MockNamingClient())
        assert finals[1].name != "ANXIETY"

    @settings(max_examples=50, deadline=None)
    @given(
        names=st.lists(
            st.text(alphabet="abcXYZ ()123", min_size=1, max_size=12),
            min_size=1,
            max_size=8,
        )
    )
    def test_output_always_pairwise_distinct(self, names):
        namings = [_naming(i + 1, name) for i, name in enumerate(names)]
        finals = ensure_unique(namings, MockNamingClient())
        lowered = [p.name.casefold() for p in finals]
        assert len(set(lowered)) == len(lowered)


class TestRemoteClient:
    def test_posts_chat_payload_and_reads_content(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, timeout=None):
            seen["url"] = url
            seen["payload"] = json
            doc = {"name": "Worry", "definition": "d", "examples": list(SAMPLE)}
            content = "```json\n" + __import__("json").dumps(doc) + "\n```"
            return httpx.Response(
                200, json={"content": content}, request=httpx.Request("POST", url)
            )

        monkeypatch.setattr(httpx, "post", fake_post)
        client = RemoteNamingClient("http://naming", model="test-model")
        proposal = name_dimension(client, SAMPLE, LABELS)
        assert proposal.name == "Worry"
        assert seen["url"] == "http://naming"
        assert seen["payload"]["model"] == "test-model"
        assert seen["payload"]["messages"][0]["role"] == "user"
