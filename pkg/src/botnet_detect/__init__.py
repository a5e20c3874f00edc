"""Detect coordinated retweet networks (botnets) in retweet logs.

Pipeline: :mod:`ingest` -> :mod:`detect` -> :mod:`community` ->
:mod:`amplify` -> :mod:`evaluate` -> :mod:`report`.  :mod:`synth` builds
planted-botnet test data and :mod:`cli` wires everything together.
"""

__version__ = "0.1.0"
