#!/usr/bin/env python3
"""One-off word counter used to freeze expected statistics for the fixtures.

Deliberately shares no code with the Rust crate: tokens are `\\w+` runs,
lowercased, minus the words in the stopword file given on the command line.

    python3 scripts/oracle_token_counts.py crates/core/src/stats/stopwords_en.txt \
        crates/core/fixtures/comments50.jsonl
"""
import collections
import json
import re
import sys


def main():
    stop_path, *corpora = sys.argv[1:]
    with open(stop_path) as f:
        stop = {w.strip().lower() for w in f if w.strip()}
    for path in corpora:
        counts = collections.Counter()
        with open(path) as f:
            for line in f:
                if not line.strip():
                    continue
                text = json.loads(line)["text"]
                for tok in re.findall(r"\w+", text.lower()):
                    if tok not in stop:
                        counts[tok] += 1
        total = sum(counts.values())
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
        print(path)
        print("  top5:", top)
        print("  tokens:", total, "types:", len(counts))
        print("  vocab_diversity: %d/%d = %.12f" % (len(counts), total, len(counts) / total))


if __name__ == "__main__":
    main()
