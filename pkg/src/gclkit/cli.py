"""Command-line entry point.

Subcommands: synth (write dataset + trial list), train (checkpoint + metrics
CSV), eval (EER report), verify (self-check suites). Every command is a pure
function of (config, seed); timestamps appear only in `# generated=` header
lines so outputs can be compared byte-for-byte below them.

All randomness derives from the single --seed through named substreams
(data, init, augment, trials), so each component reproduces independently.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import evaluate as ev
from . import synth, verify
from .config import DEFAULTS, format_defaults, load_config
from .encoder import Encoder
from .kernels import KernelParams
from .train import TrainConfig, train

STREAMS = {"data": 2, "init": 1, "augment": 3, "trials": 4}
CSV_SCHEMA = "gclkit-metrics v1"
CKPT_SCHEMA = "gclkit-checkpoint v1"


def substream(seed, name):
    return np.random.default_rng([seed, STREAMS[name]])


def _synth_cfg(cfg, seed):
    return synth.SyntheticConfig(
        n_speakers=cfg["data.n_speakers"],
        utterances_per_speaker=cfg["data.utterances_per_speaker"],
        feature_dim=cfg["data.feature_dim"],
        embedding_dim=cfg["train.embedding_dim"],
        intra_spread=cfg["data.intra_spread"],
        inter_spread=cfg["data.inter_spread"],
        seed=seed,
    )


def _train_cfg(cfg, mode):
    return TrainConfig(
        mode=mode,
        steps=cfg["train.steps"],
        lr=cfg["train.lr"],
        momentum=cfg["train.momentum"],
        batch_slots=cfg["train.batch_slots"],
        k_prime=cfg["train.k_prime"],
        unlabeled_fraction=cfg["train.unlabeled_fraction"],
        affinity=cfg["train.affinity"],
        kernel=cfg["train.kernel"],
        tau=cfg["kernel.tau"],
        gamma=cfg["kernel.gamma"],
        beta=cfg["kernel.beta"],
        hidden_dim=cfg["train.hidden_dim"],
        embedding_dim=cfg["train.embedding_dim"],
        epsilon=cfg["loss.epsilon"],
        ratio_transform=cfg["loss.ratio_transform"],
        relaxed_unlabeled=cfg["affinity.relaxed_unlabeled"],
        eval_every=cfg["train.eval_every"],
    )


def _aug_spec(cfg):
    return synth.AugmentationSpec(
        noise_sigma=cfg["augment.noise_sigma"],
        gain_low=cfg["augment.gain_low"],
        gain_high=cfg["augment.gain_high"],
        dropout_rate=cfg["augment.dropout_rate"],
    )


def split_dataset(dataset, n_holdout, seed):
    """Deterministic split into (train speakers, held-out speakers for trials)."""
    rng = np.random.default_rng([seed, 5])
    speakers = np.unique(dataset.labels)
    held = rng.choice(speakers, size=n_holdout, replace=False) if n_holdout else []
    mask = np.isin(dataset.labels, held)
    train_ds = synth.LabeledDataset(dataset.features[~mask], dataset.labels[~mask])
    held_ds = synth.LabeledDataset(dataset.features[mask], dataset.labels[mask])
    return train_ds, held_ds


def save_dataset(path, dataset):
    with open(path, "w") as fh:
        fh.write(f"# gclkit-dataset v1 n={len(dataset.labels)} f={dataset.features.shape[1]}\n")
        for y, row in zip(dataset.labels, dataset.features):
            fh.write(str(int(y)) + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_dataset(path):
    labels = []
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            parts = line.split()
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    return synth.LabeledDataset(np.array(rows), np.array(labels))


def save_checkpoint(path, encoder, kernel_params, mode):
    tensors = dict(encoder.params)
    tensors["kernel.gamma"] = np.atleast_1d(np.asarray(kernel_params.gamma, float))
    tensors["kernel.beta"] = np.atleast_1d(np.asarray(kernel_params.beta, float))
    if kernel_params.proj is not None:
        tensors["kernel.proj"] = kernel_params.proj
    with open(path, "w") as fh:
        fh.write(f"# {CKPT_SCHEMA}\n")
        fh.write(f"meta mode={mode} kind={kernel_params.kind} tau={kernel_params.tau!r} "
                 f"f_in={encoder.f_in} hidden={encoder.hidden} d_out={encoder.d_out}\n")
        for name in sorted(tensors):
            t = np.atleast_2d(tensors[name])
            fh.write(f"tensor {name} {' '.join(map(str, tensors[name].shape))}\n")
            for row in t:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_checkpoint(path):
    with open(path) as fh:
        header = fh.readline()
        if CKPT_SCHEMA not in header:
            raise ValueError(f"not a {CKPT_SCHEMA} file: {path}")
        meta = dict(kv.split("=") for kv in fh.readline().split()[1:])
        tensors = {}
        line = fh.readline()
        while line:
            _, name, *shape = line.split()
            shape = tuple(int(s) for s in shape)
            n_rows = shape[0] if len(shape) == 2 else 1
            rows = [[float(v) for v in fh.readline().split()] for _ in range(n_rows)]
            tensors[name] = np.array(rows).reshape(shape)
            line = fh.readline()
    encoder = Encoder(int(meta["f_in"]), int(meta["hidden"]), int(meta["d_out"]),
                      np.random.default_rng(0))
    for k in encoder.params:
        encoder.params[k] = tensors[k]
    kernel = KernelParams(
        kind=meta["kind"], tau=float(meta["tau"]),
        gamma=float(tensors["kernel.gamma"][0]), beta=float(tensors["kernel.beta"][0]),
        proj=tensors.get("kernel.proj"),
    )
    return encoder, kernel, meta


def write_metrics(path, metrics, timestamp=True):
    with open(path, "w") as fh:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S") if timestamp else "fixed"
        fh.write(f"# {CSV_SCHEMA} generated={stamp}\n")
        fh.write("step,mode,loss,mean_ratio,grad_norm,unlabeled_per_batch,eer_on_val\n")
        for r in metrics:
            eer_s = "" if r.eer_on_val is None else repr(r.eer_on_val)
            fh.write(f"{r.step},{r.mode},{r.loss!r},{r.mean_ratio!r},"
                     f"{r.grad_norm!r},{r.unlabeled_per_batch},{eer_s}\n")


def cmd_synth(cfg, seed, out):
    out.mkdir(parents=True, exist_ok=True)
    dataset = synth.synth_dataset(_synth_cfg(cfg, seed), np.random.default_rng([seed, 0]))
    train_ds, held_ds = split_dataset(dataset, cfg["data.holdout_speakers"], seed)
    save_dataset(out / "train.txt", train_ds)
    save_dataset(out / "holdout.txt", held_ds)
    trials = ev.build_trials(held_ds, cfg["eval.n_pairs"], substream(seed, "trials"))
    ev.save_trials(out / "trials.txt", trials)
    print(f"wrote {out}/train.txt ({len(train_ds.labels)} rows), "
          f"holdout.txt ({len(held_ds.labels)} rows), trials.txt ({len(trials.labels)} pairs)")
    return 0


def cmd_train(cfg, seed, out, mode=None):
    out.mkdir(parents=True, exist_ok=True)
    mode = mode or cfg["train.mode"]
    train_ds = load_dataset(out / "train.txt")
    tc = _train_cfg(cfg, mode)

    labeled_pool, unlabeled_pool = train_ds, None
    if mode == "semi":
        labeled_pool, unlabeled_pool = synth.hide_labels(
            train_ds, cfg["data.labeled_speakers"], np.random.default_rng([seed, 6])
        )
    elif mode == "unsupervised":
        labeled_pool, unlabeled_pool = None, train_ds.features

    result = train(
        labeled_pool, tc, seed=seed, unlabeled_pool=unlabeled_pool,
        aug_spec=_aug_spec(cfg),
        init_rng=substream(seed, "init"), data_rng=substream(seed, "data"),
        augment_rng=substream(seed, "augment"),
    )
    save_checkpoint(out / "checkpoint.txt", result.encoder, result.kernel_params, mode)
    write_metrics(out / "metrics.csv", result.metrics)
    last = result.metrics[-1].loss if result.metrics else float("nan")
    print(f"trained mode={mode} steps={tc.steps}; final loss {last:.6f}; "
          f"wrote {out}/checkpoint.txt and metrics.csv")
    return 0


def cmd_eval(cfg, seed, out):
    encoder, _, meta = load_checkpoint(out / "checkpoint.txt")
    held_ds = load_dataset(out / "holdout.txt")
    trials = ev.load_trials(out / "trials.txt")
    emb = encoder(held_ds.features)
    scores, labels = ev.score_trials(trials, emb)
    res = ev.eer(scores, labels)
    report = (f"mode={meta['mode']} eer={res.eer:.4f} threshold={res.threshold:.4f} "
              f"targets={res.n_target} nontargets={res.n_nontarget}")
    (out / "eer.txt").write_text(report + "\n")
    print(report)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gclkit")
    parser.add_argument("--print-defaults", action="store_true",
                        help="print all config keys with defaults and exit")
    sub = parser.add_subparsers(dest="command")
    for name in ("synth", "train", "eval", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mode", choices=("supervised", "semi", "unsupervised"), default=None)
        p.add_argument("--out", type=Path, default=Path("runs/default"))
    args = parser.parse_args(argv)

    if args.print_defaults:
        print(format_defaults())
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    if args.command == "verify":
        return 0 if verify.run_all() else 1
    try:
        cfg = load_config(args.config)
        if args.command == "synth":
            return cmd_synth(cfg, args.seed, args.out)
        if args.command == "train":
            return cmd_train(cfg, args.seed, args.out, mode=args.mode)
        return cmd_eval(cfg, args.seed, args.out)
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
