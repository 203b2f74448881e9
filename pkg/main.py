"""
cutofflab - 命令行主入口
"""
import sys

from cutofflab.cli import main

if __name__ == "__main__":
    sys.exit(main())
