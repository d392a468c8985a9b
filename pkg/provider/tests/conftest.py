import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

#: Words the tiny model knows as whole tokens.
MODEL_WORDS = [
    "bed", "bet", "book", "call", "choice", "cut", "feet", "foot", "food",
    "friends", "go", "hat", "hear", "house", "i", "know", "look", "make",
    "no", "own", "play", "point", "read", "rest", "see", "shapes", "shot",
    "to", "want", "watch", "we", "you", "your",
]
CONTEXT_WORDS = ["a", "and", "do", "is", "it", "let's", "mamma", "okay",
                 "put", "that's", "the", "this", "what"]


def pytest_runtest_logreport(report):
    if report.when != "call" or "acceptance" not in getattr(report, "keywords", {}):
        return
    status = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\n[ACCEPTANCE] {name}: {status}", file=sys.stderr)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: ties a test to an acceptance criterion")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A small masked LM saved to disk, loadable by local path."""
    torch = pytest.importorskip("torch")
    import json

    from transformers import BertConfig, BertForMaskedLM

    path = tmp_path_factory.mktemp("tiny-mlm")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += MODEL_WORDS + CONTEXT_WORDS
    (path / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    (path / "tokenizer_config.json").write_text(
        json.dumps({"tokenizer_class": "BertTokenizer", "do_lower_case": True}),
        encoding="utf-8",
    )

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertForMaskedLM(config).save_pretrained(path)
    return str(path)
