"""Federated training simulator for lightweight cellular-automata segmentation models.

Subpackages:
    nca          two-stage NCA backbone, loss, manual BPTT, SGD
    he           additively homomorphic encryption over real vectors
    compression  4-bit quantization and top-k sparsification codecs
    fl           client/server protocol and the federated round driver
    netsim       deterministic link model and transfer ledger
    data         synthetic segmentation data, partitioning, Dice metric
    service      FastAPI layer wrapping the simulator
"""

__version__ = "0.1.0"
