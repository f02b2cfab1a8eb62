import sys

from scripts.cli import dispatch


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
