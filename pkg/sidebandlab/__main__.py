"""Entry point for ``python -m sidebandlab``."""

from .cli import main

raise SystemExit(main())
