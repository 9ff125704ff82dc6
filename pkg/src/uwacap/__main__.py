import sys

from uwacap.cli import main

sys.exit(main())
