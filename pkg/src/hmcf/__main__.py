import sys

from hmcf.cli import main

sys.exit(main())
