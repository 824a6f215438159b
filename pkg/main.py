# main.py
import sys

# Python version guard - terminate execution on interpreters older than 3.11
if sys.version_info < (3, 11):
    raise RuntimeError(
        f"Unsupported Python version: {sys.version}. "
        "This project requires Python 3.11 or newer."
    )

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from app.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
