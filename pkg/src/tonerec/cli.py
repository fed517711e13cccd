"""``tonerec`` command line: ingest -> tag -> build -> evaluate -> recommend -> report.

Exit codes: 0 success, 1 internal error, 2 input/IO error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__, _kernels
from .config import PipelineConfig, load_config
from .corpus import join_corpus, load_movies, load_ratings, read_corpus, save_corpus
from .diagnostics import configure_stderr
from .errors import ConfigError, InputError
from .tagging import TaggingError, TransportError

log = logging.getLogger("tonerec")

CORPUS_FILE = "corpus.json"
TAGGED_FILE = "corpus_tagged.json"
REPORT_FILE = "report.json"


def _common_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="TOML pipeline config")
    parser.add_argument("--threads", type=int, default=default, help="worker threads (default: CPU count)")
    parser.add_argument("--output-dir", default=default, help="override paths.output_dir")
    parser.add_argument("--seed", type=int, default=default, help="override tagging and split seeds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tonerec", description=__doc__.splitlines()[0])
    _common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("ingest", "load and join the movie and ratings files"),
        ("tag", "attach tone-of-voice labels (fixture or live LLM)"),
        ("build", "write matrix dumps"),
        ("evaluate", "run the five-setup MAE/RMSE experiment"),
        ("recommend", "top-K recommendations for one user"),
        ("report", "genre/tone distributions and the feature graph"),
        ("version", "print the version"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _common_flags(p, suppress=True)
        if name == "recommend":
            p.add_argument("--user", type=int, required=True)
            p.add_argument("--k", type=int, default=10)
            p.add_argument("--setup", default="1TOV", help="feature setup used for neighbor search")
        if name == "report":
            p.add_argument("--min-count", type=int, default=5)
            p.add_argument("--graphml", action="store_true", help="also write graph.graphml")
    return parser


def _settings(args) -> tuple[PipelineConfig, int, Path]:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.paths.output_dir = args.output_dir
    if args.seed is not None:
        cfg.tagging.seed = args.seed
        cfg.evaluation.split_seed = args.seed
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    out = Path(cfg.paths.output_dir)
    return cfg, threads, out


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise InputError(f"missing {path}; run `tonerec {hint}` first")
    return path


def _load_best_corpus(out: Path):
    tagged = out / TAGGED_FILE
    if tagged.is_file():
        return read_corpus(tagged)
    return read_corpus(_require(out / CORPUS_FILE, "ingest"))


def cmd_ingest(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    corpus = join_corpus(load_movies(cfg.paths.movies), load_ratings(cfg.paths.ratings))
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out / CORPUS_FILE)
    s = corpus.stats
    print(f"movies={s.movies} users={s.users} ratings={s.ratings} genre_assignments={s.genre_assignments}")
    return 0


def _tagger(cfg: PipelineConfig):
    from .tagging import FixtureTagger, OpenAIChatClient, ToneVocabulary

    t = cfg.tagging
    vocab = ToneVocabulary.from_file(t.vocabulary, t.vocabulary_mode) if t.vocabulary else ToneVocabulary(mode=t.vocabulary_mode)
    if t.mode == "fixture":
        return FixtureTagger(t.seed, vocab), vocab
    return OpenAIChatClient(t.endpoint, t.model), vocab


def cmd_tag(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    from .tagging import TagCache, tag_corpus

    corpus = read_corpus(_require(out / CORPUS_FILE, "ingest"))
    client, vocab = _tagger(cfg)
    cache = TagCache(cfg.paths.cache or out / "tag_cache.json", client.model)
    for k in sorted(set(cfg.tagging.k)):
        before = cache.hits
        corpus = tag_corpus(corpus, k, client, cache, vocab, threads=threads)
        hits = cache.hits - before
        n = len(corpus.movies)
        print(f"k={k}: tagged {sum(1 for t in corpus.tone_runs[k].values() if t)}/{n} movies, "
              f"cache hits {hits}/{n} ({100.0 * hits / n:.1f}%)")
    save_corpus(corpus, out / TAGGED_FILE)
    return 0


def cmd_build(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    from .matrices import build_basic_matrix, build_user_item, dump_matrix, extend_matrix, filter_favorites, project_user_features
    from .vocab import TONES

    corpus = _load_best_corpus(out)
    mdir = out / "matrices"
    mdir.mkdir(parents=True, exist_ok=True)
    basic = build_basic_matrix(corpus)
    ui = build_user_item(corpus)
    fav = filter_favorites(ui, cfg.matrices.favorite_threshold)
    dumps = {"basic.txt": basic, "user_item.txt": ui, "user_favorite.txt": fav,
             "user_genre.txt": project_user_features(fav, basic, "genre", cfg.matrices.aggregation)}
    for k, run in corpus.tone_runs.items():
        ext = extend_matrix(basic, run, TONES)
        dumps[f"extended_k{k}.txt"] = ext
        dumps[f"user_tone_k{k}.txt"] = project_user_features(fav, ext, "tone", cfg.matrices.aggregation)
    for name, m in dumps.items():
        (mdir / name).write_text(dump_matrix(m), encoding="utf-8")
        print(f"{name}: {m.n_ones if hasattr(m, 'n_ones') else m.n_cells} active cells")
    return 0


def _experiment_configs(cfg: PipelineConfig):
    from .evaluation import ExperimentConfig

    return [
        ExperimentConfig(
            feature_setup=name,
            similarity_source=cfg.similarity.source,
            means_scope=cfg.similarity.means_scope,
            aggregation=cfg.matrices.aggregation,
            n_neighbors=cfg.similarity.n_neighbors,
            min_overlap=cfg.similarity.min_overlap,
            test_fraction=cfg.evaluation.test_fraction,
            split_seed=cfg.evaluation.split_seed,
            allow_negative=cfg.similarity.allow_negative,
            favorite_threshold=cfg.matrices.favorite_threshold,
        )
        for name in cfg.evaluation.configs
    ]


def cmd_evaluate(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    from .evaluation import run_experiment

    corpus = _load_best_corpus(out)
    report = run_experiment(corpus, _experiment_configs(cfg), threads=threads)
    (out / REPORT_FILE).write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.format_table())
    return 0


def cmd_recommend(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    from .evaluation import FeatureSetup
    from .matrices import build_basic_matrix, build_user_item, extend_matrix, filter_favorites, project_user_features
    from .recommender import recommend_top_k
    from .similarity import neighbors_for
    from .vocab import TONES

    corpus = _load_best_corpus(out)
    setup = FeatureSetup.parse(args.setup)
    if setup.tone_k is not None and setup.tone_k not in corpus.tone_runs:
        raise ConfigError(f"setup {setup.value} needs tones with k={setup.tone_k}; run `tonerec tag` first")
    if args.k < 1:
        raise ConfigError("--k must be >= 1")
    ui = build_user_item(corpus)
    if args.user not in ui:
        raise InputError(f"user {args.user} has no ratings")
    fav = filter_favorites(ui, cfg.matrices.favorite_threshold)
    if cfg.similarity.source == "favorites":
        source = fav
    else:
        basic = build_basic_matrix(corpus)
        features = basic if setup.tone_k is None else extend_matrix(basic, corpus.tone_runs[setup.tone_k], TONES)
        source = project_user_features(fav, features, setup.columns, cfg.matrices.aggregation)
    s = cfg.similarity
    nbrs = neighbors_for(source, args.user, s.n_neighbors, s.min_overlap, s.means_scope, s.allow_negative)
    recs = recommend_top_k(args.user, args.k, sorted(corpus.movies), nbrs, ui)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["rank", "movie_id", "title", "predicted_rating"])
    for r in recs:
        w.writerow([r.rank, r.movie_id, corpus.movies[r.movie_id].title, f"{r.value:.4f}"])
    return 0


def cmd_report(cfg: PipelineConfig, threads: int, out: Path, args) -> int:
    from .analytics import write_report
    from .matrices import build_basic_matrix, extend_matrix
    from .vocab import TONES

    corpus = _load_best_corpus(out)
    if not corpus.tone_runs:
        raise ConfigError("report needs tone assignments; run `tonerec tag` first")
    k = max(corpus.tone_runs)
    extended = extend_matrix(build_basic_matrix(corpus), corpus.tone_runs[k], TONES)
    written = write_report(corpus, extended, out, args.min_count, args.graphml)
    for name in written:
        print(out / name)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "tag": cmd_tag,
    "build": cmd_build,
    "evaluate": cmd_evaluate,
    "recommend": cmd_recommend,
    "report": cmd_report,
}


def main(argv=None) -> int:
    configure_stderr()
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(f"tonerec {__version__} (kernels: {_kernels.BACKEND})")
        return 0
    try:
        cfg, threads, out = _settings(args)
        return COMMANDS[args.command](cfg, threads, out, args)
    except ConfigError as exc:
        log.error("error: %s", exc)
        return 3
    except (InputError, TransportError, OSError) as exc:
        log.error("error: %s", exc)
        return 2
    except TaggingError as exc:
        log.error("error: %s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
