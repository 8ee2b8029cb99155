# wickbench/runs/__init__.py
"""
Run kinds package.

Each module registers one family of run kinds on the RunRegistry:
- static: spectrum, gibbs, twopoint, assumption1
- dynamics: evolve, duhamel
- verification: wick-check, kubo
- sweeps: adiabatic-sweep, improved-sweep (parallel over grid points)

Run functions take a RunContext and return a RunOutcome; errors propagate to the
runner and are converted to exit codes by the error handler.
"""
