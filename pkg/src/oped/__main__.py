import sys

from oped.cli import main

sys.exit(main())
