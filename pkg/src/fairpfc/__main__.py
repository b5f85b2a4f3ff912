import sys

from fairpfc.cli import main

sys.exit(main())
