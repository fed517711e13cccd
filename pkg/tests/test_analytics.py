import json
import xml.etree.ElementTree as ET

import pytest

from tonerec.analytics import (
    build_feature_graph,
    genre_distribution,
    group_small,
    tone_distribution,
    write_report,
)
from tonerec.corpus import MovieRecord, RatingEvent, join_corpus
from tonerec.errors import ConfigError
from tonerec.matrices import build_basic_matrix, extend_matrix


def corpus_of(genre_lists):
    catalog = {i: MovieRecord(i, f"M{i}", "d", tuple(g)) for i, g in enumerate(genre_lists, 1)}
    return join_corpus(catalog, [RatingEvent(1, i, 4.0) for i in catalog])


def test_genre_counts():
    report = genre_distribution(corpus_of([["Drama"], ["Drama", "Action"]]))
    assert [(e.label, e.count) for e in report.entries] == [("Drama", 2), ("Action", 1)]
    assert sum(e.percentage for e in report.entries) == pytest.approx(100)


def test_genre_shape_drama_adventure_action():
    lists = [["Drama"]] * 6 + [["Adventure", "Drama"]] * 3 + [["Action"]] * 2 + [["Musical"]]
    report = genre_distribution(corpus_of(lists))
    assert [e.label for e in report.entries] == ["Drama", "Adventure", "Action", "Musical"]


def test_grouping_hand_case():
    report = group_small({"A": 6, "B": 2, "C": 2, "D": 1}, 5)
    assert [(e.label, e.count) for e in report.entries] == [("A", 6), ("Others (1)", 4), ("Others (2)", 1)]
    assert report.grouping == (("Others (1)", ("B", "C")), ("Others (2)", ("D",)))
    assert report.total == 11


def test_grouping_vacuous():
    report = group_small({"A": 6, "B": 5}, 5)
    assert report.grouping == ()
    assert [(e.label, e.count) for e in report.entries] == [("A", 6), ("B", 5)]


def test_grouping_sorted_with_ties_by_label():
    report = group_small({"Zed": 7, "Abe": 7, "Q": 9}, 5)
    assert [e.label for e in report.entries] == ["Q", "Abe", "Zed"]


def test_tone_distribution_mass_and_recount(tagged_fixture):
    report = tone_distribution(tagged_fixture, 3)
    naive = 0
    for tones in tagged_fixture.tone_runs[2].values():
        naive += len(tones)
    assert report.total == naive
    assert sum(e.percentage for e in report.entries) == pytest.approx(100, abs=0.1)
    grouped_members = sum(len(m) for _, m in report.grouping)
    listed = [e for e in report.entries if not e.label.startswith("Others (")]
    assert grouped_members + len(listed) == len({t for ts in tagged_fixture.tone_runs[2].values() for t in ts})


def test_tone_distribution_untagged(fixture_corpus):
    with pytest.raises(ConfigError):
        tone_distribution(fixture_corpus)


def test_graph_counts():
    corpus = corpus_of([["Drama"]])
    ext = extend_matrix(build_basic_matrix(corpus), {1: ("Epic",)})
    g = build_feature_graph(ext, corpus)
    assert len(g.nodes) == 3 and len(g.edges) == 2
    empty = build_feature_graph(extend_matrix(build_basic_matrix(corpus), {}), corpus)
    assert empty.edges == ((1, "genre", "Drama"),)


def test_graph_edges_equal_one_cells(tagged_fixture):
    ext = extend_matrix(build_basic_matrix(tagged_fixture), tagged_fixture.tone_runs[2])
    ones = 0
    for row in ext.cells.tolist():
        for cell in row:
            ones += cell == 1
    g = build_feature_graph(ext, tagged_fixture)
    assert len(g.edges) == ones
    movie_nodes = {n for n, kind, _ in g.nodes if kind == "movie"}
    assert all(f"movie:{m}" in movie_nodes for m, _, _ in g.edges)


def test_write_report_files(tagged_fixture, tmp_path):
    ext = extend_matrix(build_basic_matrix(tagged_fixture), tagged_fixture.tone_runs[2])
    written = write_report(tagged_fixture, ext, tmp_path, graphml=True)
    assert {"genres.csv", "tones.csv", "tones_grouped.json", "graph_nodes.csv", "graph_edges.csv"} <= set(written)
    grouped = json.loads((tmp_path / "tones_grouped.json").read_text())
    assert sum(e["count"] for e in grouped["entries"]) == grouped["total"] == 60
    root = ET.parse(tmp_path / "graph.graphml").getroot()
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:edge", ns)) == ext.n_ones
    first = (tmp_path / "graph_edges.csv").read_text()
    write_report(tagged_fixture, ext, tmp_path)
    assert (tmp_path / "graph_edges.csv").read_text() == first
