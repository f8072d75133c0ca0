"""Prompt assembly, deterministic generation, anchoring, and revision."""

from __future__ import annotations

import random

import pytest

from weaver.callouts import Callout, resolve_callout
from weaver.charts import new_spec
from weaver.errors import FactError, GeneratorError
from weaver.facts import DataFact, compute_facts
from weaver.formatting import fmt_percent, fmt_value
from weaver.narrative import (
    ACCEPTED,
    DeterministicGenerator,
    RevisionRequest,
    TextGenerator,
    assemble_prompt,
    generate,
    generate_from_facts,
    revise,
)
from weaver.organizer import score_facts


@pytest.fixture
def scatter_setup(countries):
    spec = new_spec(
        "scatterplot", "ds-countries",
        x_attr="gdpPercap", y_attr="lifeExp",
        color_attr="continent", identity_attr="country", id="c",
    )
    callout = Callout(
        "c", "brush2d",
        {"xCoordRange": [10, 200], "yCoordRange": [5, 150],
         "xValueRange": [1000, 20000], "yValueRange": [40, 75]},
    )
    package = resolve_callout(callout, spec, countries)
    bundle = compute_facts(package, countries)
    score_facts(bundle.facts)
    return package, bundle


def numbers_of(fact: DataFact) -> list[str]:
    out = []
    for value in fact.numeric_payload().values():
        if fmt_value(value) in fact.template_text:
            out.append(fmt_value(value))
        else:
            out.append(fmt_percent(value))
    return out


class TestAssemblePrompt:
    def test_brush_prompt_shows_brushed_and_full_ranges(self, scatter_setup):
        package, bundle = scatter_setup
        prompt = assemble_prompt(
            bundle.facts[:3], package.chart_metadata, package.interaction_metadata, "Earlier text."
        )
        assert "brushed gdpPercap values 1,000 to 20,000" in prompt.interaction_block
        assert "full gdpPercap axis" in prompt.interaction_block
        assert "brushed lifeExp values 40 to 75" in prompt.interaction_block

    def test_empty_context_marker(self, scatter_setup):
        package, bundle = scatter_setup
        prompt = assemble_prompt(bundle.facts[:1], package.chart_metadata, package.interaction_metadata, "")
        assert prompt.context_block == "(story begins here)"

    def test_context_truncated_to_last_2000_chars(self, scatter_setup):
        package, bundle = scatter_setup
        long_text = "x" * 5000 + "END"
        prompt = assemble_prompt(bundle.facts[:1], package.chart_metadata, package.interaction_metadata, long_text)
        assert len(prompt.context_block) == 2000
        assert prompt.context_block.endswith("END")

    def test_facts_block_preserves_cart_order(self, scatter_setup):
        package, bundle = scatter_setup
        facts = bundle.facts[:3]
        prompt = assemble_prompt(facts, package.chart_metadata, package.interaction_metadata, "")
        assert prompt.facts_block == tuple(f.template_text for f in facts)

    def test_empty_facts_rejected(self, scatter_setup):
        package, _ = scatter_setup
        with pytest.raises(FactError):
            assemble_prompt([], package.chart_metadata, package.interaction_metadata, "")

    def test_sections_render_in_fixed_order(self, scatter_setup):
        package, bundle = scatter_setup
        text = assemble_prompt(
            bundle.facts[:2], package.chart_metadata, package.interaction_metadata, "ctx"
        ).to_text()
        positions = [text.index(h) for h in ("## Visualization", "## Context", "## Interaction", "## Data Facts", "## Task")]
        assert positions == sorted(positions)


class TestDeterministicGeneration:
    def test_single_fact_is_lead_in_plus_fact(self, scatter_setup):
        package, bundle = scatter_setup
        fact = bundle.facts[0]
        result = generate_from_facts(
            [fact], package.chart_metadata, package.interaction_metadata, "", DeterministicGenerator()
        )
        assert result.text.startswith("This scatterplot shows lifeExp by gdpPercap")
        assert fact.template_text in result.text

    def test_same_prompt_twice_is_identical(self, scatter_setup):
        package, bundle = scatter_setup
        gen = DeterministicGenerator()
        prompt = assemble_prompt(bundle.facts[:4], package.chart_metadata, package.interaction_metadata, "")
        assert generate(prompt, gen).text == generate(prompt, gen).text

    def test_every_payload_number_appears_verbatim(self, scatter_setup):
        package, bundle = scatter_setup
        result = generate_from_facts(
            bundle.facts, package.chart_metadata, package.interaction_metadata, "", DeterministicGenerator()
        )
        for fact in result.anchored_facts:
            for number in numbers_of(fact):
                assert number in result.text

    def test_generator_failure_preserves_prompt(self, scatter_setup):
        package, bundle = scatter_setup

        class Broken(TextGenerator):
            generator_id = "broken"

            def generate(self, prompt, rotation=0):
                raise GeneratorError("boom")

        prompt = assemble_prompt(bundle.facts[:1], package.chart_metadata, package.interaction_metadata, "")
        with pytest.raises(GeneratorError) as err:
            generate(prompt, Broken())
        assert err.value.prompt is prompt


class TestNoRawDataInvariant:
    def test_sentinel_cells_never_reach_the_prompt(self):
        from weaver.tabular import load_dataset

        sentinel = "XQZ_SENTINEL_937"
        csv_text = "name,region,value,secret\n" + "\n".join(
            f"n{i},r{i % 3},{i * 10},{sentinel}_{i}" for i in range(12)
        )
        ds = load_dataset(csv_text, "s", dataset_id="d")
        spec = new_spec("bar", "d", x_attr="region", y_attr="value", identity_attr="name", id="c")
        package = resolve_callout(Callout("c", "discrete_click", {"keys": ["n1", "n2"]}), spec, ds)
        bundle = compute_facts(package, ds)
        score_facts(bundle.facts)
        prompt = assemble_prompt(bundle.facts, package.chart_metadata, package.interaction_metadata, "")
        assert sentinel not in prompt.to_text()


class TestRevision:
    def accepted_result(self, scatter_setup, n_facts=4):
        package, bundle = scatter_setup
        result = generate_from_facts(
            bundle.facts[:n_facts], package.chart_metadata, package.interaction_metadata,
            "", DeterministicGenerator(),
        )
        result.accepted = ACCEPTED
        return result

    def test_shorten_keeps_all_numbers(self, scatter_setup):
        result = self.accepted_result(scatter_setup)
        revised = revise(result, RevisionRequest((0, 10), "shorten"), DeterministicGenerator())
        assert len(revised.text) < len(result.text)
        for fact in result.anchored_facts:
            for number in numbers_of(fact):
                assert number in revised.text

    def test_expand_appends_reference_sentence(self, scatter_setup):
        result = self.accepted_result(scatter_setup)
        revised = revise(result, RevisionRequest((0, 0), "expand"), DeterministicGenerator())
        assert revised.text.startswith(result.text)
        assert "For reference" in revised.text

    def test_regenerate_changes_text_not_facts(self, scatter_setup):
        result = self.accepted_result(scatter_setup)
        revised = revise(result, RevisionRequest((0, 5), "regenerate"), DeterministicGenerator())
        assert revised.text != result.text
        assert revised.anchored_facts == result.anchored_facts

    def test_custom_requires_instruction(self, scatter_setup):
        result = self.accepted_result(scatter_setup)
        with pytest.raises(FactError):
            revise(result, RevisionRequest((0, 5), "custom", ""), DeterministicGenerator())

    def test_pending_result_cannot_be_revised(self, scatter_setup):
        package, bundle = scatter_setup
        result = generate_from_facts(
            bundle.facts[:2], package.chart_metadata, package.interaction_metadata, "", DeterministicGenerator()
        )
        with pytest.raises(FactError):
            revise(result, RevisionRequest((0, 1), "shorten"), DeterministicGenerator())

    def test_span_out_of_bounds(self, scatter_setup):
        result = self.accepted_result(scatter_setup)
        with pytest.raises(FactError):
            revise(result, RevisionRequest((0, 10 ** 6), "shorten"), DeterministicGenerator())

    def test_all_modes_preserve_numbers(self, scatter_setup):
        rng = random.Random(19)
        for mode in ("shorten", "expand", "regenerate", "custom"):
            result = self.accepted_result(scatter_setup, n_facts=rng.randint(1, 6))
            request = RevisionRequest((0, 3), mode, "tighter" if mode == "custom" else "")
            revised = revise(result, request, DeterministicGenerator())
            for fact in result.anchored_facts:
                for number in numbers_of(fact):
                    assert number in revised.text
