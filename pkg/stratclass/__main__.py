"""Module entry point: ``python -m stratclass``"""

import sys

from stratclass.main import main

sys.exit(main())
