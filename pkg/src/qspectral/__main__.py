"""Allow running as `python -m qspectral`."""

from qspectral.main import main

main()
