import sys

from . import main


def entry():
    return main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(entry())
