import sys

from rgquant.cli import main

sys.exit(main())
