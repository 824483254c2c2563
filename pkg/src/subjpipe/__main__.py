import sys

from subjpipe.cli import main

sys.exit(main())
