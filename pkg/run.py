import sys

from epidemic_fv.main import main

if __name__ == "__main__":
    sys.exit(main())
