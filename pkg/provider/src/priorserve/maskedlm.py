"""Masked-language-model scorer behind the /prior protocol.

For each request the discourse window is flattened around the masked
utterance, the target position is replaced with the model's mask token,
and the input is truncated symmetrically around the mask to the model's
token limit. Candidate logits are read off at the mask position and
softmaxed over the candidate set only, so the response is a distribution
over exactly the requested words.
"""

from __future__ import annotations

import logging

from .protocol import PriorRequest
from .scripted import ScriptError

log = logging.getLogger(__name__)


class MaskedLMScorer:
    def __init__(self, model_id: str, max_context_tokens: int | None = None,
                 device: str = "cpu", strict_candidates: bool = False):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForMaskedLM.from_pretrained(model_id)
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.strict_candidates = strict_candidates
        model_limit = getattr(self.model.config, "max_position_embeddings", 512)
        limit = max_context_tokens or model_limit
        # reserve room for [CLS] and [SEP]
        self.max_body_tokens = max(8, min(limit, model_limit) - 2)
        if self.tokenizer.mask_token_id is None:
            raise ValueError(f"{model_id} has no mask token; not a masked LM")

    def _subtokens(self, words: list[str]) -> list[int]:
        return self.tokenizer(
            " ".join(words), add_special_tokens=False)["input_ids"]

    def _candidate_ids(self, candidates: list[str]) -> tuple[list[int], list[int], list[str]]:
        """Indices and vocab ids of single-token candidates, plus exclusions."""
        keep_idx: list[int] = []
        ids: list[int] = []
        excluded: list[str] = []
        unk = self.tokenizer.unk_token_id
        for i, word in enumerate(candidates):
            pieces = self.tokenizer(word, add_special_tokens=False)["input_ids"]
            if len(pieces) == 1 and pieces[0] != unk:
                keep_idx.append(i)
                ids.append(pieces[0])
            else:
                excluded.append(word)
        return keep_idx, ids, excluded

    def _build_input(self, request: PriorRequest) -> tuple[list[int], int]:
        """Flatten the window, truncating symmetrically around the mask."""
        masked_words = list(request.masked_utterance)
        masked_words[request.mask_index] = self.tokenizer.mask_token
        center = self._subtokens(masked_words)
        mask_id = self.tokenizer.mask_token_id
        mask_pos = center.index(mask_id)

        budget = self.max_body_tokens
        if len(center) > budget:
            # keep the mask centered when the utterance alone overflows
            half = (budget - 1) // 2
            lo = max(0, mask_pos - half)
            hi = min(len(center), lo + budget)
            lo = max(0, hi - budget)
            center = center[lo:hi]
            mask_pos -= lo

        left_units = [self._subtokens(u) for u in request.context_before]
        right_units = [self._subtokens(u) for u in request.context_after]
        left: list[int] = []
        right: list[int] = []
        room = budget - len(center)
        li, ri = len(left_units) - 1, 0
        # alternate sides, nearest utterances first
        while room > 0 and (li >= 0 or ri < len(right_units)):
            if li >= 0:
                unit = left_units[li][-room:]
                left = unit + left
                room -= len(unit)
                li -= 1
            if room <= 0:
                break
            if ri < len(right_units):
                unit = right_units[ri][:room]
                right = right + unit
                room -= len(unit)
                ri += 1
        body = left + center + right
        cls_id, sep_id = self.tokenizer.cls_token_id, self.tokenizer.sep_token_id
        input_ids = [cls_id] + body + [sep_id]
        return input_ids, 1 + len(left) + mask_pos

    def prior(self, request: PriorRequest) -> tuple[list[float], list[str] | None]:
        torch = self._torch
        keep_idx, ids, excluded = self._candidate_ids(request.candidates)
        if excluded and (self.strict_candidates or not keep_idx):
            raise ScriptError(
                422,
                f"{len(excluded)} candidate(s) unknown to the model vocabulary: "
                f"{excluded[:5]}...")
        input_ids, mask_pos = self._build_input(request)
        with torch.no_grad():
            batch = torch.tensor([input_ids], device=self.device)
            logits = self.model(input_ids=batch).logits[0, mask_pos]
            candidate_logits = logits[torch.tensor(ids, device=self.device)]
            probs = torch.softmax(candidate_logits.double(), dim=0).cpu().tolist()
        out = [0.0] * len(request.candidates)
        for i, p in zip(keep_idx, probs):
            out[i] = p
        return out, (excluded or None)
