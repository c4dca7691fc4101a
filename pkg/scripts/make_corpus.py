"""Write a synthetic MIDI corpus plus seed phrases into a directory.

Usage: python3 scripts/make_corpus.py data/ --seed 0
Creates data/corpus/ (20 twelve-bar files) and data/seeds/ (8 sixteen-note
files), all derived deterministically from the seed.
"""

import argparse
from pathlib import Path

from jazzgen.synthetic import CORPUS_FILES, SEED_FILES, write_corpus, write_seeds


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("directory", type=Path, help="target directory")
    parser.add_argument("--seed", type=int, default=0, help="corpus seed (default 0)")
    parser.add_argument("--files", type=int, default=CORPUS_FILES, help="corpus file count")
    parser.add_argument("--seed-files", type=int, default=SEED_FILES, help="seed phrase count")
    args = parser.parse_args()

    corpus_dir = args.directory / "corpus"
    seeds_dir = args.directory / "seeds"
    write_corpus(corpus_dir, seed=args.seed, n_files=args.files)
    write_seeds(seeds_dir, seed=args.seed, n_files=args.seed_files)
    print(f"wrote {args.files} corpus files to {corpus_dir}")
    print(f"wrote {args.seed_files} seed files to {seeds_dir}")


if __name__ == "__main__":
    main()
