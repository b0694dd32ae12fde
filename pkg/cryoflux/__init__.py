from cryoflux import cli
import sys


def main():
    try:
        sys.exit(cli._main())
    except KeyboardInterrupt:
        print("Program interrupted. Exiting...")
        sys.exit(1)
