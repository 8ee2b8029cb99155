"""Allow `python -m wickbench`."""

from wickbench.cli_main import main

main()
