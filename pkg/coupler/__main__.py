"""python -m coupler"""

import sys

from coupler.main import main

sys.exit(main())
