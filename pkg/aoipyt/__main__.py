import sys

from aoipyt.cli import main

sys.exit(main())
