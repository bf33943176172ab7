"""Entry point for `python -m brentcast`."""

from .cli import main

if __name__ == "__main__":
    main()
