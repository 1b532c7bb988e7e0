import os, sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))
from src.covering.cli import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
