import sys

from export_tool.cli import main

sys.exit(main())
