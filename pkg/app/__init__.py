# app/__init__.py
import sys

# Python version guard - terminate execution on interpreters older than 3.11
if sys.version_info < (3, 11):
    raise RuntimeError(
        f"Unsupported Python version: {sys.version}. "
        "This project requires Python 3.11 or newer."
    )

__version__ = "1.0.0"
