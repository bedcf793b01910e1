import sys

from bench_cli.api import main

if __name__ == "__main__":
    sys.exit(main())
