import sys

from uccsim.cli import main

sys.exit(main())
