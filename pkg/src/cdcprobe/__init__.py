"""cdcprobe: a workbench for probing content-defined chunking schemes.

Implements the chunkers of three deduplicating backup designs (a
Tarsnap-style running hash, a Borg-style buzhash, a Restic-style Rabin
fingerprint), simulates the chunk/compress/encrypt upload pipeline, and
runs parameter-extraction attacks and length-leakage analyses against
the simulated observations.
"""

__version__ = "0.1.0"
