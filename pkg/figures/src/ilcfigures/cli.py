import argparse
import sys

from .figures import FORMAT_CHOICES, WHICH_CHOICES, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from an ilclab output directory.",
    )
    parser.add_argument(
        "--input", required=True, help="directory holding trials.csv and signals.csv"
    )
    parser.add_argument("--which", choices=WHICH_CHOICES, default="both")
    parser.add_argument(
        "--format", choices=FORMAT_CHOICES, default="png", dest="output_format"
    )
    parser.add_argument(
        "--trial",
        type=int,
        default=None,
        help="trial to plot in the outputs figure (default: last dumped)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        input_dir=args.input,
        which=args.which,
        output_format=args.output_format,
        trial_to_plot=args.trial,
    )
    try:
        written = render(spec)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"figures error: {message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
