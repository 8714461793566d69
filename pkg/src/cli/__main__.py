import sys

from src.cli.index import main

if __name__ == "__main__":
    sys.exit(main())
