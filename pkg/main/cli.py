import argparse
import sys

from dotenv import load_dotenv

from baseline import cmd_baseline_budget, cmd_baseline_sac200
from inference import cmd_diagnose, cmd_eval
from report import cmd_report
from train import cmd_train


def build_parser():
    parser = argparse.ArgumentParser(description="RBF-PEARL meta-RL lab")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="meta-train one or more seeds")
    train.add_argument("--config", type=str, required=True, help="path of the INI config")
    train.add_argument(
        "--seed", type=int, default=None,
        help="train this seed only (default: [meta] seeds seeds from [run] seed)",
    )
    train.add_argument("--out", type=str, default=None, help="overrides [run] output_dir")
    train.add_argument("--name", type=str, default=None, help="overrides [run] name")
    train.add_argument(
        "--resume", action="store_true", help="continue from {out}/{name}/last.pth"
    )
    train.add_argument(
        "--threads", type=int, default=None, help="worker threads for collection (default: config)"
    )

    evaluate = sub.add_parser("eval", help="adapt a checkpoint to the test tasks")
    evaluate.add_argument("--checkpoint", type=str, required=True, help="path of a .pth checkpoint")
    evaluate.add_argument(
        "--n_test_tasks", type=int, default=None, help="number of test tasks (default: config)"
    )
    evaluate.add_argument("--seed", type=int, default=None, help="evaluation seed (default: config)")
    evaluate.add_argument(
        "--out", type=str, default=None, help="report directory (default: checkpoint directory)"
    )
    evaluate.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")

    baseline = sub.add_parser("baseline", help="task-specific SAC baselines")
    baseline.add_argument("--config", type=str, required=True, help="path of the INI config")
    baseline.add_argument(
        "--mode",
        type=str,
        default="sac200",
        choices=("sac200", "budget"),
        help="sac200: fixed observation budget, budget: return per env step checkpoint (default: sac200)",
    )
    baseline.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
    baseline.add_argument("--out", type=str, default=None, help="overrides [run] output_dir")
    baseline.add_argument(
        "--n_test_tasks", type=int, default=None, help="number of test tasks (default: config)"
    )

    report = sub.add_parser("report", help="aggregate runs into curves and tables")
    report.add_argument("run_dirs", nargs="+", help="run directories with metrics.csv")
    report.add_argument("--out", type=str, default="./report", help="output directory (default: ./report)")

    diagnose = sub.add_parser("diagnose", help="latent, RBF and collapse diagnostics of a run")
    diagnose.add_argument("run_dir", type=str, help="run directory with last.pth")
    diagnose.add_argument("--out", type=str, default=None, help="output directory (default: run_dir)")
    diagnose.add_argument("--eps", type=float, default=0.01, help="KL collapse threshold (default: 0.01)")
    diagnose.add_argument(
        "--window", type=int, default=10, help="records below eps before flagging (default: 10)"
    )
    return parser


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    print(args)

    if args.command == "train":
        return cmd_train(args.config, args.seed, args.out, args.name, args.resume, args.threads)
    if args.command == "eval":
        return cmd_eval(args.checkpoint, args.n_test_tasks, args.seed, args.out, args.threads)
    if args.command == "baseline":
        run = cmd_baseline_sac200 if args.mode == "sac200" else cmd_baseline_budget
        return run(args.config, args.seed, args.out, args.n_test_tasks)
    if args.command == "report":
        cmd_report(args.run_dirs, args.out)
        return 0
    return cmd_diagnose(args.run_dir, args.out, args.eps, args.window)


if __name__ == "__main__":
    sys.exit(main())
