#!/usr/bin/env python3
"""
Generate synthetic leak corpora for desk-scale builds.

Passwords are drawn with Zipf-like frequencies (rank r has weight 1/r^s),
so the head of the corpus looks like real leak data. Pairs attach each
draw to a random username.

Usage:
    make_corpus.py out/                    # 100k passwords, 50k pairs, sha1 digests
    make_corpus.py out/ -n 1000000 -s 1.1  # larger and steeper
    make_corpus.py out/ --seed 7           # reproducible
"""

import argparse
import sys
from pathlib import Path

import numpy as np

# Add parent to path so we can import c3py
sys.path.insert(0, str(Path(__file__).parent.parent))
from c3py import hash_password

ALPHABET = np.array(list("abcdefghijklmnopqrstuvwxyz0123456789"))


def make_vocabulary(size: int, rng: np.random.Generator) -> list:
    """Distinct random passwords, 6 to 12 characters."""
    words = set()
    while len(words) < size:
        length = int(rng.integers(6, 13))
        words.add("".join(rng.choice(ALPHABET, size=length)))
    return sorted(words)


def zipf_draws(vocab: list, count: int, exponent: float, rng: np.random.Generator) -> list:
    weights = 1.0 / np.arange(1, len(vocab) + 1) ** exponent
    picks = rng.choice(len(vocab), size=count, p=weights / weights.sum())
    return [vocab[i] for i in picks]


def write_lines(path: Path, lines) -> int:
    n = 0
    with open(path, "w") as f:
        for line in lines:
            f.write(line + "\n")
            n += 1
    return n


def main():
    parser = argparse.ArgumentParser(description="Generate synthetic leak corpora")
    parser.add_argument("output", help="output directory")
    parser.add_argument("-n", "--passwords", type=int, default=100_000, help="password draws")
    parser.add_argument("-p", "--pairs", type=int, default=50_000, help="username/password draws")
    parser.add_argument("-u", "--users", type=int, default=20_000, help="distinct usernames")
    parser.add_argument("-s", "--exponent", type=float, default=1.0, help="Zipf exponent")
    parser.add_argument("--vocab", type=int, default=0, help="distinct passwords (default n/4)")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()

    if args.passwords < 1 or args.users < 1:
        parser.error("need at least one password and one user")

    rng = np.random.default_rng(args.seed)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    vocab = make_vocabulary(args.vocab or max(1, args.passwords // 4), rng)
    passwords = zipf_draws(vocab, args.passwords, args.exponent, rng)
    n = write_lines(out / "passwords.txt", passwords)
    print(f"passwords.txt: {n} lines, {len(set(passwords))} distinct")

    n = write_lines(out / "digests.txt", (hash_password(w).digest for w in passwords))
    print(f"digests.txt:   {n} sha1 lines (unsorted, with repeats)")

    if args.pairs:
        users = [f"user{i:06d}" for i in range(args.users)]
        owners = rng.integers(0, len(users), size=args.pairs)
        pair_words = zipf_draws(vocab, args.pairs, args.exponent, rng)
        n = write_lines(out / "pairs.txt", (f"{users[u]}\t{w}" for u, w in zip(owners, pair_words)))
        print(f"pairs.txt:     {n} lines")


if __name__ == "__main__":
    main()
