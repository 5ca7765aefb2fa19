import sys

from bathsync.cli import main

sys.exit(main())
