import sys
from pathlib import Path

# make sibling test modules importable (test_acceptance reuses oracles
# defined in test_linalg)
sys.path.insert(0, str(Path(__file__).parent))
