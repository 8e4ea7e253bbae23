import sys

from flyingcat.cli import main

sys.exit(main())
