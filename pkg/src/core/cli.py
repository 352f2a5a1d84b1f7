"""Command-line entry points: ingest, serve, query, graph inspection."""

from __future__ import annotations

import json
from pathlib import Path

import click

from .backends import make_backend
from .config import backend_config, load_settings
from .errors import CoreError
from .graph import KnowledgeGraph
from .service import EngineService


def _settings(ctx: click.Context, **flags):
    config_path = ctx.obj.get("config") if ctx.obj else None
    return load_settings(flags={k: v for k, v in flags.items() if v is not None}, config_path=config_path)


def _service(settings) -> EngineService:
    backend = make_backend(backend_config(settings))
    return EngineService(Path(settings.data_dir), backend=backend)


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Key/value config file (defaults to ./core.toml when present).",
)
@click.pass_context
def main(ctx: click.Context, config: Path | None) -> None:
    """Offline procedure-checklist assistant engine."""
    ctx.obj = {"config": config}


@main.command()
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.pass_context
def ingest(ctx: click.Context, bundle: Path, data_dir: Path | None) -> None:
    """Parse BUNDLE, index it, and link it into the knowledge graph."""
    settings = _settings(ctx, data_dir=str(data_dir) if data_dir else None)
    try:
        summary = _service(settings).ingest_path(bundle)
    except CoreError as error:
        raise click.ClickException(str(error)) from error
    click.echo(
        json.dumps(
            {
                "procedure_id": summary.procedure_id,
                "chunk_count": summary.chunk_count,
                "graph_nodes_added": summary.graph_nodes_added,
            }
        )
    )


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option(
    "--ui-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Static UI assets to serve at /ui/ (default: ./frontend/dist when present).",
)
@click.pass_context
def serve(
    ctx: click.Context, port: int | None, host: str | None, data_dir: Path | None, ui_dir: Path | None
) -> None:
    """Run the HTTP API server."""
    import uvicorn

    from .api import create_app

    settings = _settings(
        ctx, port=port, host=host, data_dir=str(data_dir) if data_dir else None
    )
    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(_service(settings), ui_dir=ui_dir)
    uvicorn.run(app, host=settings.host, port=settings.port, log_level="info")


@main.command()
@click.argument("text")
@click.option("--session", "session_id", default=None, help="Server session id; needs --url.")
@click.option("--url", default=None, help="Base URL of a running server (e.g. http://127.0.0.1:8000).")
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.pass_context
def query(
    ctx: click.Context, text: str, session_id: str | None, url: str | None, data_dir: Path | None
) -> None:
    """Ask one question, locally or against a running server."""
    if session_id is not None and url is None:
        raise click.UsageError("--session only applies to a running server; pass --url too")

    if url is not None:
        _query_remote(url, session_id, text)
        return

    settings = _settings(ctx, data_dir=str(data_dir) if data_dir else None)
    service = _service(settings)
    try:
        session = service.create_session()
        result = service.handle_query(session.session_id, text)
    except CoreError as error:
        raise click.ClickException(str(error)) from error
    click.echo(result.raw_reply)
    for item in result.events:
        if item.kind.value == "ConfidenceUpdate":
            for entry in item.payload["results"]:
                click.echo(f"confidence {entry['chunk_id']} {entry['confidence']:.4f}", err=True)


def _query_remote(url: str, session_id: str | None, text: str) -> None:
    import httpx

    base = url.rstrip("/")
    try:
        with httpx.Client(timeout=30.0) as client:
            if session_id is None:
                created = client.post(f"{base}/api/sessions")
                created.raise_for_status()
                session_id = created.json()["session_id"]
            response = client.post(f"{base}/api/sessions/{session_id}/query", json={"text": text})
            if response.status_code >= 400:
                body = response.json()
                raise click.ClickException(f"{body.get('code', 'error')}: {body.get('message', '')}")
            payload = response.json()
    except httpx.HTTPError as error:
        raise click.ClickException(f"server unreachable: {error}") from error
    click.echo(payload["reply"])
    click.echo(f"session {session_id}", err=True)


@main.group()
def graph() -> None:
    """Knowledge-graph inspection."""


@graph.command("neighbors")
@click.argument("node_id")
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.pass_context
def graph_neighbors(ctx: click.Context, node_id: str, data_dir: Path | None) -> None:
    """Print the one-hop neighbors of NODE_ID."""
    settings = _settings(ctx, data_dir=str(data_dir) if data_dir else None)
    graph_path = Path(settings.data_dir) / "graph.jsonl"
    if not graph_path.is_file():
        raise click.ClickException(f"no graph at {graph_path}")
    store = KnowledgeGraph.load(graph_path)
    try:
        nodes = store.neighbors(node_id)
    except CoreError as error:
        raise click.ClickException(str(error)) from error
    for node in nodes:
        attrs = "; ".join(f"{k}: {v}" for k, v in node.attributes)
        click.echo(f"{node.node_id}\t{node.kind.value}\t{attrs}")


if __name__ == "__main__":
    main()
