"""Entry point: configure the dataset mode and serve the protocol on stdio."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from .data import speech_commands_dataset, synthetic_dataset
from .evaluate import SYNTHETIC_SCALE, evaluate
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scr-worker")
    parser.add_argument("--synthetic", action="store_true",
                        help="evaluate on seeded synthetic spectrograms (no data needed)")
    parser.add_argument("--data", default=None,
                        help="speech-commands directory (one sub-directory per command)")
    parser.add_argument("--device", choices=("cpu", "gpu"), default="cpu")
    parser.add_argument("--name", default="scr-worker")
    parser.add_argument("--threads", type=int, default=1,
                        help="torch CPU threads (1 keeps runs bit-reproducible)")
    args = parser.parse_args(argv)

    if args.device == "gpu":
        if not torch.cuda.is_available():
            print("error: --device gpu requested but CUDA is unavailable", file=sys.stderr)
            return 2
        device = "cuda"
    else:
        device = "cpu"
    torch.set_num_threads(args.threads)

    datasets: dict[int, object] = {}

    def dataset_for(seed: int):
        if seed not in datasets:
            if args.synthetic:
                datasets[seed] = synthetic_dataset(seed)
            elif args.data:
                datasets[seed] = speech_commands_dataset(Path(args.data), seed)
            else:
                raise RuntimeError("no dataset configured: start with --synthetic or --data <path>")
        return datasets[seed]

    scale = SYNTHETIC_SCALE if args.synthetic else 1

    def handler(phenotype, epochs, seed):
        dataset = dataset_for(seed)
        return evaluate(phenotype, epochs, seed, dataset, scale=scale, device=device)

    return serve(handler, name=args.name)


if __name__ == "__main__":
    sys.exit(main())
