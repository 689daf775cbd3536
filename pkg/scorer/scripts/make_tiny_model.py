"""Build the committed tiny bilingual masked-LM fixture.

A randomly initialized (seed 0) two-layer BERT with a handcrafted
Arabic/English WordPiece vocabulary. No model hub involved: the tests
only need a real masked-LM interface with exact, reproducible
probabilities, not meaningful weights.

Usage: python scripts/make_tiny_model.py
"""

from __future__ import annotations

from pathlib import Path

import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "tiny-mlm"

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    # English prompt words
    "the", "The", "capital", "of", "is", "located", "in", "was", "born",
    "and", "are", "twin", "cities", "official", "language", ".", ",", "?",
    # English labels (continents, incl. multi-token ones)
    "Africa", "Asia", "Europe", "North", "America", "Insular", "Oceania",
    "South", "Antarctica", "Australia",
    # A few capitals/countries
    "Cairo", "Paris", "London", "Berlin", "Egypt", "France", "Germany",
    "Madrid", "Rome", "Vienna", "Ottawa", "Canberra", "Wellington",
    # Arabic prompt words and labels
    "يقع", "في", "عاصمة", "هي", "ولد",
    "أفريقيا", "آسيا", "أوروبا", "أمريكا", "الشمالية",
    "أوقيانوسيا", "الجزرية", "الجنوبية",
    "مصر", "فرنسا", "القاهرة", "باريس", "لندن",
    # Subword pieces so longer words still tokenize
    "##s", "##ed", "##ing", "##ia", "##an", "##ية", "##ا",
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    vocab = {token: i for i, token in enumerate(VOCAB)}
    backend = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    backend.normalizer = normalizers.BertNormalizer(lowercase=False, strip_accents=False)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.BertProcessing(
        sep=("[SEP]", vocab["[SEP]"]), cls=("[CLS]", vocab["[CLS]"])
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
        do_lower_case=False,
    )
    tokenizer.save_pretrained(OUT)

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertForMaskedLM(config)
    model.save_pretrained(OUT)

    # Show how the multi-token labels split under this vocab.
    for label in ("Africa", "North America", "Insular Oceania", "أفريقيا", "أمريكا الشمالية"):
        print(label, "→", tokenizer(label, add_special_tokens=False)["input_ids"])
    size = sum(f.stat().st_size for f in OUT.iterdir())
    print(f"model fixture at {OUT} ({size / 1024:.0f} KiB)")


if __name__ == "__main__":
    main()
