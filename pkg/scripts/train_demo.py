#!/usr/bin/env python3
"""Train the compressor on the toy reconstruction objective and print the curve.

A fixed linear readout maps the mean compressed token to a prediction of the
mean dynamic-frame visual token; plain gradient descent on all compressor
parameters should cut the loss by orders of magnitude within 200 steps.
"""

import argparse

import tdc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--batch-seed", type=int, default=11)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--lr", type=float, default=0.05)
    parser.add_argument("--frames", type=int, default=4)
    parser.add_argument("--query-type", choices=("avgpool", "learned"), default="avgpool")
    args = parser.parse_args()

    cfg = tdc.QFormerConfig(seed=args.seed, query_type=args.query_type)
    params = tdc.init_params(cfg)
    batch = tdc.make_train_batch(cfg, seed=args.batch_seed, frames=args.frames)

    initial = None
    for step in range(1, args.steps + 1):
        params, loss = tdc.train_step(params, batch, args.lr)
        initial = loss if initial is None else initial
        if step == 1 or step % 20 == 0:
            print(f"step {step:4d}  loss {loss:.6f}")
    print(f"loss ratio final/initial: {loss / initial:.5f}")


if __name__ == "__main__":
    main()
