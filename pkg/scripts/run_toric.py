import sys
from pathlib import Path

# Add the project root directory to Python path
project_root = str(Path(__file__).parent.parent)
sys.path.append(project_root)

from src.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
