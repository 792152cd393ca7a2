"""Freezes reference-scorer outputs for the metric golden corpora.

BLEU: sacrebleu (13a, lowercase). ROUGE: rouge_score with the same 13a
tokenizer. CIDEr: the original TF-IDF cosine formulation in numpy (no
length penalty, no clipping), since pycocoevalcap ships CIDEr-D.

Usage: python3 metric_oracle.py CORPUS.jsonl > CORPUS.golden.json
"""
import json
import math
import sys
from collections import Counter

import numpy as np
from rouge_score import rouge_scorer
from sacrebleu.metrics import BLEU
from sacrebleu.tokenizers.tokenizer_13a import Tokenizer13a

_tok13a = Tokenizer13a()


def tokenize(text):
    return _tok13a(text.lower()).split()


class _Tok:
    def tokenize(self, text):
        return tokenize(text)


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def cider(pairs):
    n_docs = len(pairs)
    df = Counter()
    cands, refsets = [], []
    for p in pairs:
        c = tokenize(p["candidate"])
        rs = [tokenize(r) for r in p["references"]]
        cands.append([ngrams(c, n) for n in range(1, 5)])
        refsets.append([[ngrams(r, n) for n in range(1, 5)] for r in rs])
        seen = set()
        for r in refsets[-1]:
            for counts in r:
                seen.update(counts.keys())
        for g in seen:
            df[g] += 1

    def vec(counts, keys):
        return np.array([counts.get(k, 0) * (math.log(n_docs) - math.log(max(1.0, df.get(k, 0)))) for k in keys])

    scores = []
    for c, rs in zip(cands, refsets):
        per_n = []
        for n in range(4):
            sims = []
            for r in rs:
                keys = sorted(set(c[n]) | set(r[n]))
                a, b = vec(c[n], keys), vec(r[n], keys)
                na, nb = np.linalg.norm(a), np.linalg.norm(b)
                sims.append(0.0 if na == 0 or nb == 0 else float(a @ b) / (na * nb))
            per_n.append(np.mean(sims))
        scores.append(np.mean(per_n))
    return 10.0 * float(np.mean(scores))


def main():
    pairs = [json.loads(line) for line in open(sys.argv[1]) if line.strip()]
    max_refs = max(len(p["references"]) for p in pairs)
    ref_streams = [[p["references"][k] if k < len(p["references"]) else None for p in pairs]
                   for k in range(max_refs)]
    bleu = BLEU(lowercase=True, tokenize="13a").corpus_score([p["candidate"] for p in pairs], ref_streams).score
    scorer = rouge_scorer.RougeScorer(["rouge1", "rougeL"], tokenizer=_Tok())
    rouge = []
    for p in pairs:
        s = scorer.score_multi(p["references"], p["candidate"])
        rouge.append({"rouge1_f1": s["rouge1"].fmeasure, "rougeL_f1": s["rougeL"].fmeasure})
    out = {
        "bleu": bleu,
        "cider": cider(pairs),
        "rouge": rouge,
        "rouge1_mean": float(np.mean([r["rouge1_f1"] for r in rouge])),
        "rougeL_mean": float(np.mean([r["rougeL_f1"] for r in rouge])),
        "tokens": [tokenize(p["candidate"]) for p in pairs],
    }
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
