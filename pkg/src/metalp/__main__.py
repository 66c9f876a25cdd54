import sys

from metalp.cli import main

sys.exit(main())
