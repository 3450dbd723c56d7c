"""dipcheck: an exact checker for (eps, delta)-differential privacy of
programs in a small probabilistic while-language (.dip files).

The pipeline: parse and statically check a program, build its finite
parametrized Markov chain, compute every output probability as an exact
ratio of exponential polynomials in eps, and decide the pairwise privacy
inequalities symbolically -- for a fixed eps or for every eps in an
interval -- producing certified counter-examples when privacy fails.
"""

__version__ = "0.1.0"
