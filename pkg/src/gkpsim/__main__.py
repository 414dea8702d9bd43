import sys

from gkpsim.cli import main

sys.exit(main())
