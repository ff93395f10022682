"""Policy CLI: train, infer, eval."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import PolicyError
from .model import PolicyConfig, load_checkpoint

logger = logging.getLogger("r2g_policy")


def _config_from_args(args) -> PolicyConfig:
    kwargs = {}
    for name in ("horizon", "denoise_steps", "lr", "weight_decay",
                 "warmup_steps", "batch_size", "ema_decay", "total_steps",
                 "augment", "execute_k"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return PolicyConfig(**kwargs)


def cmd_train(args) -> int:
    from .train import train

    config = _config_from_args(args)
    result = train(args.dataset, config, args.out, seed=args.seed,
                   steps=args.steps)
    print(json.dumps({"initial_loss": result.initial_loss,
                      "final_loss": result.final_loss,
                      "checkpoint": str(result.checkpoint_path)}))
    return 0


def cmd_infer(args) -> int:
    import torch

    from .archive import observation_at, read_episode
    from .infer import infer

    policy, config, _ = load_checkpoint(args.checkpoint)
    episode = read_episode(Path(args.episode))
    clouds, proprio = observation_at(episode, args.frame)
    gen = torch.Generator().manual_seed(args.seed)
    chunk = infer(policy, clouds, proprio, args.steps, gen)
    print(json.dumps({"chunk": chunk.tolist()}))
    return 0


def cmd_eval(args) -> int:
    from .client import EnvClient
    from .eval import closed_loop_eval

    policy, config, _ = load_checkpoint(args.checkpoint)

    def factory():
        if args.connect:
            host, port = args.connect.rsplit(":", 1)
            return EnvClient(address=(host, int(port)))
        return EnvClient(command=args.serve_cmd.split())

    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    report = closed_loop_eval(factory, policy, seeds, args.episodes,
                              execute_k=args.execute_k, steps=args.steps,
                              infer_seed=args.seed)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
    sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="r2g-policy",
        description="Flow-matching policy: train on demonstration archives, "
                    "evaluate closed-loop over the stepping protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, help="override total training steps")
    p.add_argument("--horizon", type=int)
    p.add_argument("--denoise-steps", type=int, dest="denoise_steps")
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    p.add_argument("--warmup-steps", type=int, dest="warmup_steps")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--ema-decay", type=float, dest="ema_decay")
    p.add_argument("--total-steps", type=int, dest="total_steps")
    p.add_argument("--augment", choices=["off", "se3", "identity"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episode", required=True, help="episode directory")
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--serve-cmd", dest="serve_cmd",
                   help="command that serves the env over stdio")
    p.add_argument("--connect", help="host:port of a TCP-serving env")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--execute-k", type=int, dest="execute_k")
    p.add_argument("--steps", type=int, help="denoising steps at inference")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("R2G_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PolicyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
