import sys

from predevaltools.cli.main import main

sys.exit(main())
