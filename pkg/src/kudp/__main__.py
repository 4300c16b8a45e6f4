import sys

from kudp.cli import main

sys.exit(main())
