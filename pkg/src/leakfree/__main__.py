import sys

from leakfree.cli import main

sys.exit(main())
