import sys

from Scripts.cli import main

sys.exit(main())
