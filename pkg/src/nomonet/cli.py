"""Command line interface: build, project, triplets, train, eval, name, serve.

Exit codes: 0 on success, 2 on validation errors (bad flags or malformed
inputs). Build never leaves a partial network directory: it assembles into a
temporary sibling and renames on success.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

import click

from . import constructs, metrics, training
from .corpus import load_corpus, normalize_label
from .embedding import EmbeddingCache, ProviderConfig, embed_batch
from .errors import NomonetError
from .naming import MockNamingClient, RemoteNamingClient
from .network import load_embeddings, load_indicators
from .pipeline import (
    LoadedNetwork,
    build_network,
    parse_items_csv,
    project_items,
    projection_loadings_csv,
    write_network,
)


def _provider_options(fn):
    fn = click.option(
        "--provider",
        type=click.Choice(["deterministic-test", "remote-batch"]),
        default="deterministic-test",
        show_default=True,
        help="Embedding provider kind.",
    )(fn)
    fn = click.option("--endpoint", default="", help="Remote provider URL.")(fn)
    fn = click.option(
        "--prompt-template",
        default="{indicator}",
        show_default=True,
        help="Template applied to each indicator before embedding.",
    )(fn)
    fn = click.option("--max-batch", default=100, show_default=True, type=int)(fn)
    fn = click.option("--cache", "cache_dir", default=None, help="Embedding cache directory.")(fn)
    return fn


def _make_provider(provider, endpoint, prompt_template, max_batch) -> ProviderConfig:
    try:
        return ProviderConfig(
            kind=provider,
            endpoint=endpoint,
            prompt_template=prompt_template,
            max_batch=max_batch,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _positive_threshold(ctx, param, value):
    if value <= 0:
        raise click.BadParameter("--threshold must be positive")
    return value


@click.group()
def main():
    """Build and explore nomological networks of survey indicators."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "corpus_format", type=click.Choice(["csv", "tsv"]), default="csv", show_default=True)
@click.option("--components", default="kaiser", show_default=True, help='"kaiser" or an explicit count.')
@click.option("--threshold", default=0.55, show_default=True, type=float, callback=_positive_threshold)
@click.option("--extraction", type=click.Choice(["pca", "paf"]), default="pca", show_default=True)
@click.option("--kappa", default=4.0, show_default=True, type=float)
@click.option("--naming", type=click.Choice(["mock", "remote"]), default="mock", show_default=True)
@click.option("--naming-endpoint", default="", help="Chat endpoint for remote naming.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_provider_options
def build(
    input_path,
    corpus_format,
    components,
    threshold,
    extraction,
    kappa,
    naming,
    naming_endpoint,
    out_dir,
    provider,
    endpoint,
    prompt_template,
    max_batch,
    cache_dir,
):
    """Build a network directory from a labeled corpus."""
    if components != "kaiser":
        try:
            components = int(components)
        except ValueError:
            raise click.BadParameter('--components must be "kaiser" or an integer')
    provider_cfg = _make_provider(provider, endpoint, prompt_template, max_batch)
    if naming == "remote":
        if not naming_endpoint:
            raise click.UsageError("--naming remote requires --naming-endpoint")
        naming_client = RemoteNamingClient(naming_endpoint)
    else:
        naming_client = MockNamingClient()

    out = Path(out_dir)
    if out.exists():
        raise click.UsageError(f"--out {out} already exists; networks are immutable")
    try:
        corpus = load_corpus(input_path, corpus_format)
        artifacts = build_network(
            corpus,
            provider_cfg,
            components=components,
            threshold=threshold,
            extraction=extraction,
            kappa=kappa,
            naming_client=naming_client,
            cache_dir=cache_dir,
        )
    except NomonetError as exc:
        raise click.ClickException(str(exc))

    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent or "."))
    try:
        write_network(artifacts, staging)
        staging.rename(out)
    except Exception:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    proportions, cumulative = artifacts.model.explained_variance()
    click.echo(
        f"built network {out} with k={artifacts.model.k} dimensions over "
        f"p={artifacts.model.p} indicators "
        f"({100 * float(cumulative[-1]):.2f}% variance explained)"
    )
    for meta in artifacts.model.dimensions:
        click.echo(f"  Dim {meta.index}: {meta.name} ({meta.indicator_count} indicators)")


@main.command()
@click.option("--network", "network_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, help="Write loadings CSV here (default stdout).")
@_provider_options
def project(network_dir, items_path, out_path, provider, endpoint, prompt_template, max_batch, cache_dir):
    """Project new indicators into an existing network; emits the loadings CSV."""
    provider_cfg = _make_provider(provider, endpoint, prompt_template, max_batch)
    try:
        network = LoadedNetwork.load(network_dir)
        items = parse_items_csv(Path(items_path).read_text(encoding="utf-8"))
        if cache_dir:
            cache = EmbeddingCache(cache_dir)
            result = project_items(
                network, items, provider_cfg, embed_fn=cache.get_or_embed
            )
        else:
            result = project_items(network, items, provider_cfg)
    except NomonetError as exc:
        raise click.ClickException(str(exc))
    csv_text = projection_loadings_csv(result, network.model.k)
    if out_path:
        Path(out_path).write_text(csv_text, encoding="utf-8", newline="")
        for item in result.items:
            top = item.assignments[0] if item.assignments else None
            label = f"Dim {top[0]}: {top[1]} ({top[2]:.3f})" if top else "unassigned"
            click.echo(f"{item.id}: {label}")
    else:
        click.echo(csv_text, nl=False)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--merge", "merge_method", type=click.Choice(["edit", "semantic", "identity"]), default="edit", show_default=True)
@click.option("--distance", default=1, show_default=True, type=int, help="Edit distance bound for --merge edit.")
@click.option("--tau", default=0.75, show_default=True, type=float, help="Cosine threshold for --merge semantic.")
@click.option("--n-pos", default=3, show_default=True, type=int)
@click.option("--n-neg", default=3, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--report", "report_path", default=None, type=click.Path())
@_provider_options
def triplets(
    input_path, merge_method, distance, tau, n_pos, n_neg, seed, out_path, report_path,
    provider, endpoint, prompt_template, max_batch, cache_dir,
):
    """Merge construct labels and write balanced training triplets."""
    try:
        corpus = load_corpus(input_path)
        labels = sorted(
            {
                label
                for label in (normalize_label(ind.construct_label) for ind in corpus)
                if label
            }
        )
        if not labels:
            raise click.ClickException("corpus has no labeled indicators")
        if merge_method == "edit":
            merge = constructs.merge_constructs_edit(labels, d=distance)
        elif merge_method == "semantic":
            provider_cfg = _make_provider(provider, endpoint, prompt_template, max_batch)
            merge = constructs.merge_constructs_semantic(labels, provider_cfg, tau=tau)
        else:
            merge = constructs.MergeMap.identity(labels)
        build_result = constructs.build_triplets(corpus, merge, n_pos=n_pos, n_neg=n_neg, seed=seed)
    except NomonetError as exc:
        raise click.ClickException(str(exc))
    Path(out_path).write_text(constructs.triplets_csv(build_result.triplets), encoding="utf-8")
    if report_path:
        Path(report_path).write_text(constructs.merge_report(merge, build_result), encoding="utf-8")
    click.echo(
        f"wrote {len(build_result.triplets)} triplets across {len(merge.groups)} construct groups "
        f"({len(build_result.skipped_singleton)} anchors without positives)"
    )


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--triplets", "triplets_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--loss", type=click.Choice([training.AOE, training.COSINE_TRIPLET]), default=training.AOE, show_default=True)
@click.option("--margin", default=0.2, show_default=True, type=float)
@click.option("--tau", default=20.0, show_default=True, type=float, help="Temperature for all three aoe terms.")
@click.option("--epochs", default=1, show_default=True, type=int)
@click.option("--batch-size", default=8, show_default=True, type=int)
@click.option("--learning-rate", default=1e-2, show_default=True, type=float)
@click.option("--adapter-dim", default=None, type=int, help="Output dimension (default: input dimension).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--history", "history_path", default=None, type=click.Path())
@_provider_options
def train(
    corpus_path, triplets_path, loss, margin, tau, epochs, batch_size, learning_rate,
    adapter_dim, seed, out_path, history_path,
    provider, endpoint, prompt_template, max_batch, cache_dir,
):
    """Train a linear adapter on triplets over frozen base embeddings."""
    provider_cfg = _make_provider(provider, endpoint, prompt_template, max_batch)
    try:
        corpus = load_corpus(corpus_path)
        triplet_list = constructs.load_triplets_csv(
            Path(triplets_path).read_text(encoding="utf-8")
        )
        texts = corpus.texts()
        if cache_dir:
            vectors = EmbeddingCache(cache_dir).get_or_embed(provider_cfg, texts)
        else:
            vectors = embed_batch(provider_cfg, texts)
        base = {ind.id: vectors[i] for i, ind in enumerate(corpus)}
        d_in = vectors.shape[1]
        d_out = adapter_dim or d_in
        adapter = training.LinearAdapter.identity(d_in) if d_out == d_in else (
            training.LinearAdapter.random(d_in, d_out, seed=seed)
        )
        loss_cfg = training.LossConfig(
            kind=loss, margin=margin, ibn_tau=tau, angle_tau=tau, cosine_tau=tau
        )
        train_cfg = training.TrainConfig(
            batch_size=batch_size, learning_rate=learning_rate, epochs=epochs, seed=seed
        )
        result = training.train(adapter, triplet_list, base, train_cfg, loss_cfg)
    except NomonetError as exc:
        raise click.ClickException(str(exc))
    result.adapter.save(out_path)
    if history_path:
        Path(history_path).write_text(training.history_csv(result.history), encoding="utf-8")
    first = result.history[0][1]
    last = result.history[-1][1]
    click.echo(
        f"trained {len(result.history)} steps; loss {first:.4f} -> {last:.4f}; adapter saved to {out_path}"
    )


@main.command("eval")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", "embeddings_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory holding embeddings.bin and indicators.csv (e.g. a network dir).")
@click.option("--threshold", default=None, type=float, help="Fixed decision threshold (default: scan).")
@click.option("--adapter", "adapter_path", default=None, type=click.Path(exists=True, dir_okay=False))
def eval_pairs(pairs_path, embeddings_dir, threshold, adapter_path):
    """Score labeled pairs by embedding cosine and print the metric report."""
    try:
        rows = metrics.load_pairs_csv(Path(pairs_path).read_text(encoding="utf-8"))
        corpus = load_indicators(embeddings_dir)
        vectors = load_embeddings(embeddings_dir)
        if adapter_path:
            vectors = training.LinearAdapter.load(adapter_path).apply(vectors)
        by_id = {ind.id: vectors[i] for i, ind in enumerate(corpus)}
        pairs = metrics.score_pairs(rows, by_id)
        summary = metrics.metric_summary(pairs, threshold)
    except NomonetError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--network", "network_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--client", "client_kind", type=click.Choice(["mock", "remote"]), default="mock", show_default=True)
@click.option("--naming-endpoint", default="", help="Chat endpoint for remote naming.")
@click.option("--seed", default=0, show_default=True, type=int)
def name(network_dir, client_kind, naming_endpoint, seed):
    """Regenerate dimension names for an existing network in place."""
    from .pipeline import _name_dimensions  # shared naming orchestration
    from .network import save_network

    if client_kind == "remote" and not naming_endpoint:
        raise click.UsageError("--client remote requires --naming-endpoint")
    client = (
        RemoteNamingClient(naming_endpoint) if client_kind == "remote" else MockNamingClient()
    )
    try:
        from .network import load_similarity

        network = LoadedNetwork.load(network_dir)
        model = network.model
        counts = {d.index: d.indicator_count for d in model.dimensions}
        dimensions = _name_dimensions(
            client, model.loadings, model.threshold, network.corpus, counts,
            seed=seed, max_sample=1000,
        )
        renamed = model.with_dimensions(dimensions)
        try:
            similarity = load_similarity(network_dir)
        except NomonetError:
            similarity = None
        save_network(
            renamed,
            network_dir,
            corpus=network.corpus,
            embeddings=network.embeddings,
            similarity=similarity,
        )
    except NomonetError as exc:
        raise click.ClickException(str(exc))
    for meta in renamed.dimensions:
        click.echo(f"Dim {meta.index}: {meta.name}")


@main.command()
@click.option("--networks-dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="JSON service config; flags override its values.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help="Port (default 8000).")
@_provider_options
def serve(networks_dir, config_path, host, port, provider, endpoint, prompt_template, max_batch, cache_dir):
    """Run the HTTP service over a directory of network builds."""
    import logging

    import uvicorn

    from .api import ServiceConfig, create_app

    if config_path:
        config = ServiceConfig.from_file(config_path)
    elif networks_dir:
        provider_cfg = _make_provider(provider, endpoint, prompt_template, max_batch)
        config = ServiceConfig(networks_dir=Path(networks_dir), provider=provider_cfg)
    else:
        raise click.UsageError("provide --networks-dir or --config")
    if networks_dir:
        config.networks_dir = Path(networks_dir)
    if port is not None:
        config.port = port
    config.with_env_overrides()

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    uvicorn.run(create_app(config), host=host, port=config.port)


if __name__ == "__main__":
    sys.exit(main())
