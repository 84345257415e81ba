"""python -m wildreid"""
import sys

from wildreid.cli import main

sys.exit(main())
