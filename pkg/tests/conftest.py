import csv
from importlib import resources

import pytest

from tonerec.corpus import join_corpus, load_movies, load_ratings
from tonerec.tagging import FixtureTagger, tag_corpus

FIXTURE = resources.files("tonerec.data.fixture")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def movies_csv(tmp_path):
    def make(rows, name="movies.csv"):
        return write_csv(tmp_path / name, ["movie_id", "title", "genres", "description"], rows)

    return make


@pytest.fixture
def ratings_csv(tmp_path):
    def make(rows, name="ratings.csv", header=("user_id", "movie_id", "rating", "timestamp")):
        return write_csv(tmp_path / name, header, rows)

    return make


@pytest.fixture(scope="session")
def fixture_corpus():
    return join_corpus(
        load_movies(FIXTURE.joinpath("movies.csv")), load_ratings(FIXTURE.joinpath("ratings.csv"))
    )


@pytest.fixture(scope="session")
def tagged_fixture(fixture_corpus):
    tagger = FixtureTagger(seed=0)
    corpus = tag_corpus(fixture_corpus, 1, tagger)
    return tag_corpus(corpus, 2, tagger)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS):
        terminalreporter.write_line(line)
