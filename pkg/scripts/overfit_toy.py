"""Learning-rate sweep on a separable 20-sentence toy corpus.

Reports, per learning rate and seed, the training accuracy and the last
epoch loss of the reference encoder after a fixed number of epochs.
The default step size is tuned for a pretrained transformer; with the small
numpy encoder it barely moves the weights, which this sweep makes visible.

    python3 scripts/overfit_toy.py --epochs 60 --seeds 0 1 2
"""

import argparse

from subjpipe.corpus import CorpusSplit, LabeledSentence, SubjLabel
from subjpipe.trainer import TrainConfig, build_vocab, predict, reference_encoder, train


def toy_split():
    rows = []
    for i in range(10):
        rows.append(LabeledSentence(f"o{i}", f"the report is a fact number {i}", SubjLabel.OBJ, "en"))
        rows.append(LabeledSentence(f"s{i}", f"the report is awful number {i}", SubjLabel.SUBJ, "en"))
    return CorpusSplit("train", "en", tuple(rows))


def run(split, lr, seed, epochs, dim):
    cfg = TrainConfig(learning_rate=lr, epochs=epochs, seed=seed)
    enc = reference_encoder(build_vocab([r.text for r in split.rows]), dim, seed)
    result = train(split, enc, cfg)
    gold = {r.sentence_id: r.label for r in split.rows}
    preds = predict(split, result.encoder)
    acc = sum(gold[sid] is lab for sid, lab in preds) / len(preds)
    return acc, result.epoch_losses[-1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lrs", type=float, nargs="+", default=[2e-5, 1e-2, 0.1, 0.5])
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--dim", type=int, default=16)
    args = ap.parse_args(argv)

    split = toy_split()
    print("lr\t" + "\t".join(f"seed{s}" for s in args.seeds))
    for lr in args.lrs:
        cells = []
        for seed in args.seeds:
            acc, loss = run(split, lr, seed, args.epochs, args.dim)
            cells.append(f"{acc:.2f} ({loss:.3f})")
        print(f"{lr:g}\t" + "\t".join(cells))


if __name__ == "__main__":
    main()
