"""Edge-cloud offloading simulator for frame-periodic mobile-AR workflows.

The package couples a deterministic discrete-event engine with a family of
schedulers (look-ahead Monte Carlo tree search, plain MCTS, greedy, genetic,
random) and a composite QoS objective, so offloading policies can be compared
at desk scale.
"""

__version__ = "0.1.0"
