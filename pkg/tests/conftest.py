import pytest

TOY_FACTS = (
    "e1\tbornOn\t1956\n"
    "e1\tstarredIn\tm1\n"
    "e2\tbornOn\t1962\n"
    "e3\tstarredIn\tm2\n"
)
TOY_ALIASES = (
    "e1\tTom Hanks\n"
    "e1\tHanks\n"
    "e2\tTom Cruise\n"
    "e3\tJane Hanks\n"
)
TOY_QUESTIONS = (
    "e1\tbornOn\t1956\tHow old is Tom Hanks?\n"
    "e1\tstarredIn\tm1\tWhat movie did Hanks star in?\n"
    "e2\tbornOn\t1962\tWhen was Tom Cruise born?\n"
    "e3\tbornOn\t1970\tWhen was Jane Hanks born?\n"
)


@pytest.fixture
def toy_files(tmp_path):
    """facts/aliases/questions files for a 3-entity toy KB."""
    facts = tmp_path / "facts.tsv"
    aliases = tmp_path / "aliases.tsv"
    questions = tmp_path / "questions.tsv"
    facts.write_text(TOY_FACTS)
    aliases.write_text(TOY_ALIASES)
    questions.write_text(TOY_QUESTIONS)
    return facts, aliases, questions


@pytest.fixture
def toy_kb(toy_files):
    from kbqa.corpus import load_facts

    facts, aliases, _ = toy_files
    return load_facts(str(facts), str(aliases))
