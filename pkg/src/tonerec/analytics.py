"""Genre and tone distributions, and the movie-feature graph export."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from xml.etree import ElementTree as ET

from .corpus import Corpus
from .errors import ConfigError
from .matrices import MovieFeatureMatrix

DEFAULT_MIN_COUNT = 5


@dataclass(frozen=True)
class DistributionEntry:
    label: str
    count: int
    percentage: float


@dataclass(frozen=True)
class DistributionReport:
    entries: tuple[DistributionEntry, ...]
    grouping: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @property
    def total(self) -> int:
        return sum(e.count for e in self.entries)

    def counts(self) -> dict[str, int]:
        return {e.label: e.count for e in self.entries}


def _report(counts: dict[str, int], grouping=()) -> DistributionReport:
    total = sum(counts.values())
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return DistributionReport(
        tuple(DistributionEntry(label, n, 100.0 * n / total if total else 0.0) for label, n in entries),
        tuple(grouping),
    )


def genre_distribution(corpus: Corpus) -> DistributionReport:
    """Genre assignment counts: each movie counts once per listed genre."""
    return _report(Counter(g for m in corpus.movies.values() for g in m.genres))


def tone_counts(corpus: Corpus, k: int | None = None) -> Counter:
    if not corpus.tone_runs:
        raise ConfigError("corpus has no tone assignments; run tagging first")
    k = max(corpus.tone_runs) if k is None else k
    if k not in corpus.tone_runs:
        raise ConfigError(f"corpus has no tone run with k={k}")
    return Counter(t for tones in corpus.tone_runs[k].values() for t in tones)


def tone_distribution(corpus: Corpus, min_count: int = DEFAULT_MIN_COUNT, k: int | None = None) -> DistributionReport:
    """Tone histogram with rare tones folded into frequency groups.

    Tones seen fewer than ``min_count`` times are pooled with every other tone
    of the same frequency into one ``Others (g)`` entry. Groups are numbered by
    descending pooled count (ties: higher per-tone frequency first).
    """
    return group_small(tone_counts(corpus, k), min_count)


def group_small(counts: dict[str, int], min_count: int = DEFAULT_MIN_COUNT) -> DistributionReport:
    listed = {t: n for t, n in counts.items() if n >= min_count}
    by_freq: dict[int, list[str]] = {}
    for t, n in counts.items():
        if n < min_count:
            by_freq.setdefault(n, []).append(t)
    groups = sorted(by_freq.items(), key=lambda kv: (-kv[0] * len(kv[1]), -kv[0]))
    grouping = []
    for g, (freq, members) in enumerate(groups, start=1):
        name = f"Others ({g})"
        listed[name] = freq * len(members)
        grouping.append((name, tuple(sorted(members))))
    return _report(listed, grouping)


@dataclass(frozen=True)
class FeatureGraph:
    nodes: tuple[tuple[str, str, str], ...]  # (node id, type, label)
    edges: tuple[tuple[int, str, str], ...]  # (movie id, feature kind, feature label)


def build_feature_graph(extended: MovieFeatureMatrix, corpus: Corpus) -> FeatureGraph:
    """Bipartite movie-feature graph: one edge per 1-cell of the matrix."""
    space = extended.feature_space
    edges = [(mid, space.kinds[j], space.labels[j]) for mid, j, _ in extended.triples()]
    used = sorted({j for _, j, _ in extended.triples()})
    nodes = [(f"movie:{mid}", "movie", corpus.movies[mid].title if mid in corpus.movies else str(mid))
             for mid in extended.movie_ids]
    nodes += [(f"{space.kinds[j]}:{space.labels[j]}", space.kinds[j], space.labels[j]) for j in used]
    return FeatureGraph(tuple(nodes), tuple(sorted(edges)))


def export_feature_graph(extended: MovieFeatureMatrix, corpus: Corpus, out_dir: str | Path, graphml: bool = False) -> FeatureGraph:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = build_feature_graph(extended, corpus)
    with (out_dir / "graph_nodes.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "type", "label"])
        w.writerows(graph.nodes)
    with (out_dir / "graph_edges.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["movie_id", "feature_type", "feature_label"])
        w.writerows(graph.edges)
    if graphml:
        write_graphml(graph, out_dir / "graph.graphml")
    return graph


def write_graphml(graph: FeatureGraph, path: str | Path) -> None:
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    ET.SubElement(root, "key", id="type", attrib={"for": "node", "attr.name": "type", "attr.type": "string"})
    ET.SubElement(root, "key", id="label", attrib={"for": "node", "attr.name": "label", "attr.type": "string"})
    g = ET.SubElement(root, "graph", id="movie_features", edgedefault="undirected")
    for node_id, kind, label in graph.nodes:
        n = ET.SubElement(g, "node", id=node_id)
        ET.SubElement(n, "data", key="type").text = kind
        ET.SubElement(n, "data", key="label").text = label
    for mid, kind, label in graph.edges:
        ET.SubElement(g, "edge", source=f"movie:{mid}", target=f"{kind}:{label}")
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def write_distribution_csv(report: DistributionReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "count", "percentage"])
        for e in report.entries:
            w.writerow([e.label, e.count, f"{e.percentage:.2f}"])


def write_report(corpus: Corpus, extended: MovieFeatureMatrix, out_dir: str | Path,
                 min_count: int = DEFAULT_MIN_COUNT, graphml: bool = False) -> dict[str, Path]:
    """Write genres.csv, tones.csv, tones_grouped.json and the graph CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_distribution_csv(genre_distribution(corpus), out_dir / "genres.csv")
    plain = _report(dict(tone_counts(corpus)))
    write_distribution_csv(plain, out_dir / "tones.csv")
    grouped = tone_distribution(corpus, min_count)
    payload = {
        "min_count": min_count,
        "total": grouped.total,
        "entries": [{"label": e.label, "count": e.count, "percentage": round(e.percentage, 2)} for e in grouped.entries],
        "groups": [{"label": name, "members": list(members)} for name, members in grouped.grouping],
    }
    (out_dir / "tones_grouped.json").write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    export_feature_graph(extended, corpus, out_dir, graphml=graphml)
    names = ["genres.csv", "tones.csv", "tones_grouped.json", "graph_nodes.csv", "graph_edges.csv"]
    if graphml:
        names.append("graph.graphml")
    return {n: out_dir / n for n in names}
