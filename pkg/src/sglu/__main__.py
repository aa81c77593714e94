import sys

from sglu.harness.cli import main

sys.exit(main())
