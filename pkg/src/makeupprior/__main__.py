import sys

from makeupprior.cli import main

sys.exit(main())
