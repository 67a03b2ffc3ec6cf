import sys

from eswm.cli import main

sys.exit(main())
