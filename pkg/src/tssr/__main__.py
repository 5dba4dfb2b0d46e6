import sys

from tssr.cli import main

sys.exit(main())
