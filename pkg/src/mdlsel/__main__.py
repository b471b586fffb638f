import sys

from mdlsel.cli import main

sys.exit(main())
