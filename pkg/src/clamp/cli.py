"""Command-line interface: training runs locally, retrieval commands run
either in process or as thin clients against a running service (--url)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .ablation import AblationSettings, ablation_suite, save_report
from .client import ServiceClient
from .contrastive import ContrastiveConfig, load_clamp_checkpoint, train_clamp
from .corpus import corpus_stats, load_pairs
from .m3 import NoiseConfig, pretrain_m3
from .model import ModelConfig, OptimizerConfig
from .model.checkpoint import load_checkpoint
from .prompts import load_prompt_file
from .retrieval import build_index, eval_search, linear_probe, load_index, save_index, search, zero_shot_classify
from .synthetic import write_toy_corpus
from .textproc import TextDropoutConfig


@click.group()
def main():
    """Contrastive language-music pretraining and retrieval."""


def _model_options(fn):
    for option in reversed(
        [
            click.option("--dim", default=128, show_default=True, help="hidden dimension"),
            click.option("--layers", default=2, show_default=True, help="encoder layers"),
            click.option("--decoder-layers", default=2, show_default=True),
            click.option("--heads", default=4, show_default=True),
        ]
    ):
        fn = option(fn)
    return fn


@main.command("pretrain-m3")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--max-patches", type=click.Choice(["512", "1024"]), default="512", show_default=True)
@click.option("--epochs", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--batch", default=8, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--noise-ratio", default=0.45, show_default=True)
@click.option("--log", type=click.Path(), default=None, help="JSONL per-epoch metrics")
@_model_options
def pretrain_m3_cmd(corpus, max_patches, epochs, seed, out, batch, lr, noise_ratio, log, dim, layers, decoder_layers, heads):
    """Masked-music pretraining over a JSONL pair corpus."""
    pairs = load_pairs(corpus)
    cfg = ModelConfig(
        hidden_dim=dim,
        encoder_layers=layers,
        decoder_layers=decoder_layers,
        heads=heads,
        max_patches=int(max_patches),
    )
    _, history = pretrain_m3(
        pairs,
        cfg,
        OptimizerConfig(lr=lr, epochs=epochs),
        NoiseConfig(ratio=noise_ratio, seed=seed),
        max_patches=int(max_patches),
        batch_size=batch,
        seed=seed,
        out_path=out,
        log_path=log,
    )
    click.echo(f"wrote {out}; final epoch loss {history[-1]:.4f}" if history else f"wrote {out}")


@main.command("train-clamp")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--m3-init", type=click.Path(exists=True), default=None)
@click.option("--epochs", default=20, show_default=True)
@click.option("--batch", default=32, show_default=True)
@click.option("--tau", default=0.2, show_default=True)
@click.option("--variant", type=click.Choice(["eq1", "infonce"]), default="eq1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--max-patches", type=click.Choice(["512", "1024"]), default="512", show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--no-text-dropout", is_flag=True, default=False)
@click.option("--vocab-out", type=click.Path(), default=None, help="also write the text vocabulary wordlist")
@click.option("--log", type=click.Path(), default=None)
@_model_options
def train_clamp_cmd(corpus, m3_init, epochs, batch, tau, variant, seed, out, max_patches, lr, no_text_dropout, vocab_out, log, dim, layers, decoder_layers, heads):
    """Joint contrastive training of the music and text encoders."""
    pairs = load_pairs(corpus)
    if m3_init:
        config, _ = load_checkpoint(m3_init)
        cfg = ModelConfig.from_dict(config["model"])
        max_patches = str(config["max_patches"])
    else:
        cfg = ModelConfig(
            hidden_dim=dim,
            encoder_layers=layers,
            decoder_layers=decoder_layers,
            heads=heads,
            max_patches=int(max_patches),
        )
    _, vocab, history = train_clamp(
        pairs,
        cfg,
        OptimizerConfig(lr=lr, epochs=epochs),
        ContrastiveConfig(temperature=tau, batch_size=batch, variant=variant),
        m3_checkpoint=m3_init,
        dropout=TextDropoutConfig(enabled=not no_text_dropout, seed=seed),
        max_patches=int(max_patches),
        seed=seed,
        out_path=out,
        log_path=log,
    )
    if vocab_out:
        vocab.save(vocab_out)
    click.echo(f"wrote {out}; final epoch loss {history[-1]:.4f}" if history else f"wrote {out}")


@main.command("index")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def index_cmd(corpus, model_path, out):
    """Embed every piece of a corpus into a flat vector index."""
    bundle = load_clamp_checkpoint(model_path)
    index = build_index(load_pairs(corpus), bundle)
    save_index(index, out)
    click.echo(f"indexed {index.count} pieces into {out}")


@main.command("search")
@click.option("--query", "-q", required=True)
@click.option("-k", default=10, show_default=True)
@click.option("--url", default=None, help="query a running service instead of loading locally")
@click.option("--index", "index_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
def search_cmd(query, k, url, index_path, model_path):
    """Semantic search by free-text query."""
    if url:
        with ServiceClient(url) as client:
            for hit in client.search(query, k)["results"]:
                click.echo(f"{hit['score']:.4f}  {hit['source_id']}")
        return
    if not (index_path and model_path):
        raise click.UsageError("provide --url or both --index and --model")
    result = search(load_index(index_path), query, k, load_clamp_checkpoint(model_path))
    for source_id, score in result.items:
        click.echo(f"{score:.4f}  {source_id}")


@main.command("classify")
@click.option("--abc-file", required=True, type=click.Path(exists=True))
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--url", default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
def classify_cmd(abc_file, prompts_path, url, model_path):
    """Zero-shot classification of one ABC file against a prompt set."""
    abc = Path(abc_file).read_text(encoding="utf-8")
    prompts = load_prompt_file(prompts_path)
    if url:
        with ServiceClient(url) as client:
            payload = client.classify(abc, prompts)
        click.echo(f"label: {payload['label']}" + ("  (tie)" if payload["tie"] else ""))
        for row in payload["scores"]:
            click.echo(f"  {row['score']:+.4f}  {row['label']}")
        return
    if not model_path:
        raise click.UsageError("provide --url or --model")
    result = zero_shot_classify(abc, prompts, load_clamp_checkpoint(model_path))
    click.echo(f"label: {result.label}" + ("  (tie)" if result.tie else ""))
    for label, score in result.scores:
        click.echo(f"  {score:+.4f}  {label}")


@main.command("eval-search")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--json-out", type=click.Path(), default=None)
def eval_search_cmd(corpus, index_path, model_path, json_out):
    """Rank each pair's own piece under its paired text query."""
    report = eval_search(load_index(index_path), load_pairs(corpus), load_clamp_checkpoint(model_path))
    click.echo(json.dumps(report.to_dict(), indent=2))
    if json_out:
        Path(json_out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


@main.command("probe")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--label-key", default="genre", show_default=True)
@click.option("--folds", default=5, show_default=True)
@click.option("--batch", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
def probe_cmd(corpus, model_path, label_key, folds, batch, seed):
    """Linear probe on frozen music features."""
    from .contrastive import encode_sequences
    from .m3 import sequences_for_pairs

    pairs = [p for p in load_pairs(corpus) if label_key in p.labels]
    if not pairs:
        raise click.UsageError(f"no pairs carry the label {label_key!r}")
    bundle = load_clamp_checkpoint(model_path)
    features = encode_sequences(bundle.model, sequences_for_pairs(pairs, bundle.config["max_patches"]))
    labels = [p.labels[label_key] for p in pairs]
    keys = [p.music.source_id for p in pairs]
    report = linear_probe(features, labels, folds=folds, batch=batch, seed=seed, keys=keys)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command("ablate")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--holdout", default=40, show_default=True, help="pairs held out for evaluation")
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
@click.option("--m3-epochs", default=15, show_default=True)
@click.option("--clamp-epochs", default=6, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@_model_options
def ablate_cmd(corpus, holdout, seeds, m3_epochs, clamp_epochs, out, dim, layers, decoder_layers, heads):
    """Run the full / no-text-dropout / no-m3 ablation across seeds."""
    pairs = load_pairs(corpus)
    train, evaluation = pairs[:-holdout], pairs[-holdout:]
    settings = AblationSettings(
        model_cfg=ModelConfig(hidden_dim=dim, encoder_layers=layers, decoder_layers=decoder_layers, heads=heads),
        m3_opt=OptimizerConfig(lr=2e-3, epochs=m3_epochs, beta2=0.98),
        clamp_opt=OptimizerConfig(lr=3e-3, epochs=clamp_epochs, beta2=0.98),
        cl_cfg=ContrastiveConfig(batch_size=16),
        noise_cfg=NoiseConfig(),
    )
    report = ablation_suite(train, evaluation, [int(s) for s in seeds.split(",")], settings)
    click.echo(json.dumps(report["mean_mrr"], indent=2))
    if out:
        save_report(report, out)


@main.command("serve")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(index_path, model_path, host, port):
    """Run the retrieval HTTP service."""
    import uvicorn

    from .service import create_app_from_paths

    uvicorn.run(create_app_from_paths(index_path, model_path), host=host, port=port)


@main.command("stats")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, default=False)
def stats_cmd(corpus, as_json):
    """Corpus statistics: ABC characters, bar patches, text tokens."""
    stats = corpus_stats(load_pairs(corpus))
    if as_json:
        click.echo(json.dumps(stats.to_dict(), indent=2))
    else:
        click.echo(f"pieces: {stats.count}")
        click.echo(stats.to_table())


@main.command("make-toy")
@click.option("--out", required=True, type=click.Path())
@click.option("-n", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
def make_toy_cmd(out, n, seed):
    """Write the synthetic key/meter corpus used by the demos."""
    write_toy_corpus(out, n, seed)
    click.echo(f"wrote {n} pairs to {out}")


if __name__ == "__main__":
    sys.exit(main())
