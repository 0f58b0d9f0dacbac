import sys

from cloudlat.cli import main

sys.exit(main())
