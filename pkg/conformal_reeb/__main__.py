import sys

from conformal_reeb.main import main

sys.exit(main())
