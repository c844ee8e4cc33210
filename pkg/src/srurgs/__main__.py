import sys

from srurgs.cli import main

sys.exit(main())
