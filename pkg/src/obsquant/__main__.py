import sys

from obsquant.cli import main

sys.exit(main())
