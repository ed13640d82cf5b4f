import sys

from voicekex.cli import main

sys.exit(main())
