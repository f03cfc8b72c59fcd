"""epicontrol: real-time epidemic decision support.

Couples a stochastic SEIR-VU compartmental simulator with nested
sequential Monte Carlo inference and two receding-horizon planners
(ICU-threshold grid search and posterior-averaged Q-learning), plus a
counterfactual experiment harness and an interactive decision service.
"""

__version__ = "0.1.0"
