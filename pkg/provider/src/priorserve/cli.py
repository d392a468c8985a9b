"""priorserve command line: serve scripted vectors or a masked LM."""

from __future__ import annotations

import logging
import sys

import click

from .scripted import ScriptedResponder
from .server import build_app, serve_stdio

log = logging.getLogger(__name__)


def _build_responder(mode, script, model, max_tokens, device, strict):
    if mode == "scripted":
        if not script:
            raise click.UsageError("--mode scripted requires --script FILE")
        return ScriptedResponder.from_file(script)
    if not model:
        raise click.UsageError("--mode maskedlm requires --model IDENTIFIER")
    from .maskedlm import MaskedLMScorer
    return MaskedLMScorer(model, max_context_tokens=max_tokens, device=device,
                          strict_candidates=strict)


@click.command()
@click.option("--mode", type=click.Choice(["scripted", "maskedlm"]), required=True)
@click.option("--script", type=click.Path(exists=True), default=None,
              help="JSON file mapping request id to a probability vector "
                   "('*' for a default, 'uniform' for an equiprobable vector).")
@click.option("--model", default=None,
              help="Masked-LM identifier: a local directory or hub name.")
@click.option("--max-tokens", default=None, type=int,
              help="Context token limit (defaults to the model's own limit).")
@click.option("--device", default="cpu", show_default=True)
@click.option("--strict-candidates", is_flag=True,
              help="Reject requests containing any candidate unknown to the "
                   "model instead of renormalizing over the known ones.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8753, show_default=True, type=int)
@click.option("--stdio", is_flag=True,
              help="Speak line-delimited JSON on stdin/stdout instead of HTTP.")
def main(mode, script, model, max_tokens, device, strict_candidates, host, port, stdio):
    """Serve prior distributions over the /prior wire protocol."""
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    responder = _build_responder(mode, script, model, max_tokens, device,
                                 strict_candidates)
    if stdio:
        serve_stdio(responder)
        return
    import uvicorn
    uvicorn.run(build_app(responder), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
