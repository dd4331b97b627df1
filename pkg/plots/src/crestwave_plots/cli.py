"""crestwave-plot: render a figure described by a key=value spec file.

Usage: crestwave-plot --spec PATH
Exit codes: 0 ok, 2 spec/schema error.
"""

from __future__ import annotations

import argparse
import sys

from .render import SchemaError, parse_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="crestwave-plot",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, help="key = value figure spec file")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    try:
        spec = parse_spec(args.spec)
        out = render(spec)
    except (SchemaError, OSError, ValueError, KeyError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
