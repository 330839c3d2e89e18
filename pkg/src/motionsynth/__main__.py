import sys

from motionsynth.cli import main

sys.exit(main())
